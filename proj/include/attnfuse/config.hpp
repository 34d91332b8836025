#pragma once

#include <filesystem>
#include <string>

#include "attnfuse/model.hpp"
#include "attnfuse/optim.hpp"
#include "attnfuse/segmenter.hpp"
#include "attnfuse/trainer.hpp"
#include "attnfuse/tsne.hpp"

namespace attnfuse::io {

struct SegmentationConfig {
    semisup::SegmenterConfig segmenter;
    int epochs_per_round = 10;
    int k = 100;
};

/// Everything a CLI run needs. Defaults reproduce the reference settings:
/// 224x224 inputs, batch 32, 50 epochs per stage, lr 0.01 dropped tenfold
/// after epoch 30, momentum 0.9, weight decay 1e-4, tau 0.75.
struct RunConfig {
    model::ModelConfig model;
    OptimizerConfig optimizer;
    int epochs = 50;
    int batch_size = 32;
    int patience = 10;
    std::uint64_t train_seed = 0;
    bool infected_first = false;
    // Share of train rows held out for validation when the manifest has none.
    double val_fraction = 0.2;
    SegmentationConfig segmentation;
    evalviz::TsneConfig tsne;
    std::string output_dir = "out";

    void validate() const;
    trainer::ProtocolConfig protocol() const;
};

/// Flat `key = value` lines grouped under [model], [optimizer], [trainer],
/// [segmenter], [tsne] and [output]. '#' starts a comment. Unknown sections
/// or keys are errors.
RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::filesystem::path& path);

/// Every key with its current value, in a form parse_config accepts.
std::string format_config(const RunConfig& cfg);

}  // namespace attnfuse::io
