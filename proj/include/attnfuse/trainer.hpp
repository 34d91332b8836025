#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "attnfuse/model.hpp"

namespace attnfuse::trainer {

using model::BranchName;

/// Which branches a training stage updates. Branches not listed are frozen.
/// Each listed branch contributes the BCE of its own head to the loss.
struct StagePlan {
    std::string name;
    std::vector<BranchName> trainable;
    int epochs = 50;
    int batch_size = 32;

    void validate() const;
    std::vector<BranchName> frozen() const;
    bool trains(BranchName b) const;
    /// Branch whose validation accuracy drives early stopping: the most
    /// downstream trainable one (fusion > infected > heatmap > global).
    BranchName monitored() const;

    static StagePlan stage_one(int epochs, int batch_size);
    static StagePlan stage_two_heatmap(int epochs, int batch_size);
    static StagePlan stage_two_infected(int epochs, int batch_size);
    static StagePlan stage_three(int epochs, int batch_size);
    /// Every branch trained at once (the joint-training ablation).
    static StagePlan joint(int epochs, int batch_size);
    static StagePlan from_name(const std::string& name, int epochs, int batch_size);
};

struct EarlyStopPolicy {
    int patience = 10;
};

/// A classification example. `seg_mask` is the lesion mask the segmenter
/// predicted for `image`; it feeds the infected branch.
struct Example {
    std::string id;
    vision::GrayImage image;
    int label = 0;
    vision::BinaryMask seg_mask;
};

struct EpochRecord {
    int epoch = 0;
    float learning_rate = 0.0f;
    float train_loss = 0.0f;
    float val_loss = 0.0f;
    float val_accuracy = 0.0f;
};

/// 1-based epoch with the highest validation accuracy, earliest on ties.
int select_best(std::span<const EpochRecord> history);

/// True once `patience` epochs have passed without beating the best.
bool should_stop(std::span<const EpochRecord> history, const EarlyStopPolicy& policy);

struct StageResult {
    std::string stage;
    std::vector<EpochRecord> history;
    int best_epoch = 0;
    bool stopped_early = false;
};

using EpochCallback = std::function<void(const std::string& stage, const EpochRecord&)>;

/// Trains the plan's branches on `train`, early-stopping on `val`, and leaves
/// `m` holding the best epoch's weights. Frozen parameters are bitwise
/// untouched. The stage's RNG stream depends only on (seed, plan name).
StageResult run_stage(model::MultiStreamModel& m, const StagePlan& plan, std::span<const Example> train,
                      std::span<const Example> val, const OptimizerConfig& opt, const EarlyStopPolicy& policy,
                      std::uint64_t seed, const EpochCallback& on_epoch = {});

struct ProtocolConfig {
    OptimizerConfig optimizer;
    EarlyStopPolicy early_stop;
    int epochs = 50;
    int batch_size = 32;
    std::uint64_t seed = 0;
    /// Run the infected stage before the heat-map stage.
    bool infected_first = false;
};

std::vector<StagePlan> default_protocol(const ProtocolConfig& cfg);

/// Stage I -> Stage II (heat-map, infected) -> Stage III.
std::vector<StageResult> run_protocol(model::MultiStreamModel& m, std::span<const Example> train,
                                      std::span<const Example> val, const ProtocolConfig& cfg,
                                      const EpochCallback& on_epoch = {});

/// Per-branch logits for an example under the current weights.
model::FullOutput infer(const model::MultiStreamModel& m, const Example& ex);

}  // namespace attnfuse::trainer
