#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "attnfuse/manifest.hpp"
#include "attnfuse/semisup.hpp"
#include "attnfuse/trainer.hpp"

namespace attnfuse::io {

/// A manifest row with its pixels loaded and resized to the model input.
struct Sample {
    std::string id;  // image_path as written in the manifest
    vision::GrayImage image;
    int label = 0;
    std::optional<vision::BinaryMask> mask;
    Split split = Split::train;
    Role role = Role::labeled_only;
};

std::vector<Sample> load_samples(const Manifest& manifest, int input_size);

struct SplitIndices {
    std::vector<std::size_t> train;
    std::vector<std::size_t> val;
    std::vector<std::size_t> test;
};

/// Classification splits. Unlabeled rows take no part. When no row is tagged
/// val, a stratified val_fraction of train is held out (seeded).
SplitIndices classification_splits(const std::vector<Sample>& samples, double val_fraction, std::uint64_t seed);

/// Seed-masked rows form the mask-labeled set; every other row, of any split,
/// enters the unlabeled pool (segmentation never sees class labels).
semisup::PseudoLabelPool segmentation_pool(const std::vector<Sample>& samples, int k);

/// Classification examples with the segmenter's lesion masks.
std::vector<trainer::Example> make_examples(const std::vector<Sample>& samples, const std::vector<std::size_t>& idx,
                                            const semisup::Segmenter& seg);

}  // namespace attnfuse::io
