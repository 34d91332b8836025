#include "attnfuse/report.hpp"

#include <cstdio>
#include <fstream>
#include <json.hpp>

#include "attnfuse/errors.hpp"

namespace attnfuse::evalviz {

using ordered_json = nlohmann::ordered_json;

ModelEvaluation evaluate_model(const model::MultiStreamModel& m, std::span<const trainer::Example> examples,
                               const std::string& split) {
    if (examples.empty()) throw ValidationError("evaluate_model: no examples in split '" + split + "'");
    std::array<std::vector<double>, 4> scores;
    std::array<std::vector<int>, 4> preds;
    std::vector<int> labels;
    for (const auto& ex : examples) {
        const auto out = trainer::infer(m, ex);
        for (std::size_t b = 0; b < model::kAllBranches.size(); ++b) {
            const Tensor probs = model::sigmoid_normalize(out.logits(model::kAllBranches[b]));
            scores[b].push_back(model::positive_score(probs));
            preds[b].push_back(model::predict_label(probs));
        }
        labels.push_back(ex.label);
    }
    ModelEvaluation ev;
    ev.split = split;
    for (std::size_t b = 0; b < 4; ++b) ev.branches[b] = evaluate(std::move(scores[b]), std::move(preds[b]), labels);
    return ev;
}

namespace {

ordered_json metrics_json(const EvalResult& r) {
    ordered_json j;
    j["accuracy"] = r.metrics.accuracy;
    j["f1"] = r.metrics.f1;
    j["auc"] = r.auc ? ordered_json(*r.auc) : ordered_json(nullptr);
    j["confusion"] = ordered_json{{"tp", r.metrics.confusion.tp},
                                  {"fp", r.metrics.confusion.fp},
                                  {"tn", r.metrics.confusion.tn},
                                  {"fn", r.metrics.confusion.fn}};
    return j;
}

}  // namespace

std::string metrics_report(const ModelEvaluation& ev) {
    const auto& fusion = ev.of(model::BranchName::fusion);
    ordered_json j;
    j["split"] = ev.split;
    j["n"] = fusion.labels.size();
    const ordered_json top = metrics_json(fusion);
    for (auto it = top.begin(); it != top.end(); ++it) j[it.key()] = it.value();
    ordered_json branches;
    for (auto b : model::kAllBranches) branches[model::to_string(b)] = metrics_json(ev.of(b));
    j["branches"] = branches;
    return j.dump(2) + "\n";
}

std::string validate_report(const std::string& text) {
    ordered_json j;
    try {
        j = ordered_json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        return std::string("not JSON: ") + e.what();
    }
    if (!j.is_object()) return "top level is not an object";
    auto check_metrics = [](const ordered_json& o, const std::string& where) -> std::string {
        for (const char* k : {"accuracy", "f1"}) {
            if (!o.contains(k) || !o[k].is_number()) return where + k + " missing or not a number";
            const double v = o[k].get<double>();
            if (v < 0.0 || v > 1.0) return where + k + " outside [0,1]";
        }
        if (!o.contains("auc") || !(o["auc"].is_null() || o["auc"].is_number())) return where + "auc missing";
        if (!o.contains("confusion") || !o["confusion"].is_object()) return where + "confusion missing";
        for (const char* k : {"tp", "fp", "tn", "fn"}) {
            if (!o["confusion"].contains(k) || !o["confusion"][k].is_number_unsigned()) {
                return where + "confusion." + k + " missing";
            }
        }
        return {};
    };
    const std::vector<std::string> order{"split", "n", "accuracy", "f1", "auc", "confusion", "branches"};
    std::size_t i = 0;
    for (auto it = j.begin(); it != j.end(); ++it, ++i) {
        if (i >= order.size() || it.key() != order[i]) return "unexpected key order at '" + it.key() + "'";
    }
    if (i != order.size()) return "missing top-level keys";
    if (!j["split"].is_string()) return "split is not a string";
    if (!j["n"].is_number_unsigned()) return "n is not a count";
    if (auto err = check_metrics(j, ""); !err.empty()) return err;
    const auto& c = j["confusion"];
    if (c["tp"].get<std::size_t>() + c["fp"].get<std::size_t>() + c["tn"].get<std::size_t>() +
            c["fn"].get<std::size_t>() !=
        j["n"].get<std::size_t>()) {
        return "confusion counts do not sum to n";
    }
    for (auto b : model::kAllBranches) {
        const auto name = model::to_string(b);
        if (!j["branches"].contains(name)) return "branches." + name + " missing";
        if (auto err = check_metrics(j["branches"][name], "branches." + name + "."); !err.empty()) return err;
    }
    return {};
}

std::string history_jsonl(std::span<const trainer::StageResult> stages) {
    std::string out;
    for (const auto& s : stages) {
        for (const auto& r : s.history) {
            ordered_json j;
            j["stage"] = s.stage;
            j["epoch"] = r.epoch;
            j["learning_rate"] = r.learning_rate;
            j["train_loss"] = r.train_loss;
            j["val_loss"] = r.val_loss;
            j["val_accuracy"] = r.val_accuracy;
            out += j.dump() + "\n";
        }
    }
    return out;
}

std::string embedding_csv(const Embedding3D& e) {
    std::string out = "id,label,x,y,z,kl\n";
    char buf[160];
    for (std::size_t i = 0; i < e.points.size(); ++i) {
        std::snprintf(buf, sizeof buf, ",%d,%.9g,%.9g,%.9g,%.9g\n", e.labels[i], e.points[i][0], e.points[i][1],
                      e.points[i][2], e.final_kl);
        out += e.ids[i] + buf;
    }
    return out;
}

std::vector<std::vector<float>> fusion_features(const model::MultiStreamModel& m,
                                                std::span<const trainer::Example> examples) {
    std::vector<std::vector<float>> out;
    out.reserve(examples.size());
    for (const auto& ex : examples) {
        const auto f = trainer::infer(m, ex);
        const auto d = f.pool_fusion.data();
        out.emplace_back(d.begin(), d.end());
    }
    return out;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
    if (path.has_parent_path()) {
        std::error_code ec;
        std::filesystem::create_directories(path.parent_path(), ec);
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
    out << text;
    if (!out) throw IoError("failed writing '" + path.string() + "'");
}

}  // namespace attnfuse::evalviz
