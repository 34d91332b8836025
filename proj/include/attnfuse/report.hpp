#pragma once

#include <array>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "attnfuse/metrics.hpp"
#include "attnfuse/trainer.hpp"
#include "attnfuse/tsne.hpp"

namespace attnfuse::evalviz {

/// Per-branch evaluation, indexed like model::kAllBranches.
struct ModelEvaluation {
    std::string split;
    std::array<EvalResult, 4> branches;

    const EvalResult& of(model::BranchName b) const { return branches[static_cast<std::size_t>(b)]; }
};

ModelEvaluation evaluate_model(const model::MultiStreamModel& m, std::span<const trainer::Example> examples,
                               const std::string& split);

/// Pretty-printed JSON with a fixed key order: split, n, accuracy, f1, auc,
/// confusion (all for the fusion branch), then per-branch results. AUC is
/// null when the split holds a single class.
std::string metrics_report(const ModelEvaluation& ev);

/// Checks the structure metrics_report produces. Returns an empty string
/// when valid, otherwise a description of the first problem.
std::string validate_report(const std::string& text);

/// One JSON object per line: stage, epoch, learning_rate, train_loss,
/// val_loss, val_accuracy.
std::string history_jsonl(std::span<const trainer::StageResult> stages);

/// `id,label,x,y,z,kl` with the final KL repeated on every row.
std::string embedding_csv(const Embedding3D& e);

/// Fusion-layer input features Pool_f for each example.
std::vector<std::vector<float>> fusion_features(const model::MultiStreamModel& m,
                                                std::span<const trainer::Example> examples);

void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace attnfuse::evalviz
