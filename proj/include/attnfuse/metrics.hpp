#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

namespace attnfuse::evalviz {

struct Confusion {
    std::size_t tp = 0;
    std::size_t fp = 0;
    std::size_t tn = 0;
    std::size_t fn = 0;

    std::size_t total() const noexcept { return tp + fp + tn + fn; }
};

struct ClassificationMetrics {
    double accuracy = 0.0;
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    Confusion confusion;
};

/// Metrics from hard predictions; label 1 (COVID) is the positive class.
/// F1 is 0 when precision + recall is 0.
ClassificationMetrics classification_metrics(std::span<const int> predictions, std::span<const int> labels);

/// Same, thresholding scores at `threshold` (score > threshold predicts 1).
ClassificationMetrics classification_metrics(std::span<const double> scores, std::span<const int> labels,
                                             double threshold);

/// ROC AUC from a descending threshold sweep with trapezoidal integration.
/// Tied scores move the curve diagonally, which gives ties half credit.
/// Throws ValidationError when only one class is present.
double auc(std::span<const double> scores, std::span<const int> labels);

struct EvalResult {
    ClassificationMetrics metrics;
    std::optional<double> auc;
    std::vector<double> scores;
    std::vector<int> predictions;
    std::vector<int> labels;
};

EvalResult evaluate(std::vector<double> scores, std::vector<int> predictions, std::vector<int> labels);

}  // namespace attnfuse::evalviz
