#include "attnfuse/metrics.hpp"

#include <algorithm>
#include <numeric>
#include <string>

#include "attnfuse/errors.hpp"

namespace attnfuse::evalviz {

namespace {

void check_labels(std::size_t n, std::span<const int> labels) {
    if (n != labels.size()) {
        throw ValidationError("metrics: " + std::to_string(n) + " predictions for " + std::to_string(labels.size()) +
                              " labels");
    }
    for (int l : labels)
        if (l != 0 && l != 1) throw ValidationError("metrics: label " + std::to_string(l) + " is not 0 or 1");
}

}  // namespace

ClassificationMetrics classification_metrics(std::span<const int> predictions, std::span<const int> labels) {
    check_labels(predictions.size(), labels);
    ClassificationMetrics m;
    auto& c = m.confusion;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        const bool pred = predictions[i] != 0;
        if (labels[i] == 1) {
            pred ? ++c.tp : ++c.fn;
        } else {
            pred ? ++c.fp : ++c.tn;
        }
    }
    const double n = static_cast<double>(c.total());
    m.accuracy = n > 0 ? static_cast<double>(c.tp + c.tn) / n : 0.0;
    m.precision = (c.tp + c.fp) ? static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fp) : 0.0;
    m.recall = (c.tp + c.fn) ? static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn) : 0.0;
    m.f1 = (m.precision + m.recall) > 0.0 ? 2.0 * m.precision * m.recall / (m.precision + m.recall) : 0.0;
    return m;
}

ClassificationMetrics classification_metrics(std::span<const double> scores, std::span<const int> labels,
                                             double threshold) {
    std::vector<int> pred(scores.size());
    for (std::size_t i = 0; i < scores.size(); ++i) pred[i] = scores[i] > threshold ? 1 : 0;
    return classification_metrics(pred, labels);
}

double auc(std::span<const double> scores, std::span<const int> labels) {
    check_labels(scores.size(), labels);
    const auto pos = static_cast<std::size_t>(std::count(labels.begin(), labels.end(), 1));
    const std::size_t neg = labels.size() - pos;
    if (pos == 0 || neg == 0) throw ValidationError("auc: undefined with a single class present");

    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

    // Integrate in counts (tp, fp) and normalize once at the end.
    double area = 0.0;
    std::size_t tp = 0, fp = 0;
    std::size_t i = 0;
    while (i < order.size()) {
        std::size_t dtp = 0, dfp = 0;
        const double s = scores[order[i]];
        while (i < order.size() && scores[order[i]] == s) {
            labels[order[i]] == 1 ? ++dtp : ++dfp;
            ++i;
        }
        area += static_cast<double>(dfp) * (static_cast<double>(tp) + 0.5 * static_cast<double>(dtp));
        tp += dtp;
        fp += dfp;
    }
    return area / (static_cast<double>(pos) * static_cast<double>(neg));
}

EvalResult evaluate(std::vector<double> scores, std::vector<int> predictions, std::vector<int> labels) {
    EvalResult r;
    r.metrics = classification_metrics(predictions, labels);
    const auto pos = std::count(labels.begin(), labels.end(), 1);
    if (pos > 0 && static_cast<std::size_t>(pos) < labels.size()) r.auc = auc(scores, labels);
    r.scores = std::move(scores);
    r.predictions = std::move(predictions);
    r.labels = std::move(labels);
    return r;
}

}  // namespace attnfuse::evalviz
