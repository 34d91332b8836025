#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "attnfuse/segmenter.hpp"

namespace attnfuse::semisup {

enum class Provenance { seed, pseudo };

std::string to_string(Provenance p);

struct MaskedImage {
    std::string id;
    vision::GrayImage image;
    vision::BinaryMask mask;
    Provenance provenance = Provenance::seed;
};

struct UnlabeledImage {
    std::string id;
    vision::GrayImage image;
};

/// Mask-labeled training images and the still-unlabeled remainder.
struct PseudoLabelPool {
    std::vector<MaskedImage> train_set;
    std::vector<UnlabeledImage> test_set;
    int k = 100;

    /// Throws if an id appears twice across both sets.
    void check_partition() const;
};

/// Mean per-pixel BCE training with momentum SGD. Returns the mean training
/// loss of each epoch. Zero epochs leaves the segmenter untouched.
std::vector<float> train_segmenter(Segmenter& seg, std::span<const MaskedImage> train_set, int epochs,
                                   std::uint64_t seed);

/// Mean BCE of the segmenter over a set, no updates.
float segmenter_loss(const Segmenter& seg, std::span<const MaskedImage> set);

/// Fraction of pixels where the 0.5-binarized prediction matches the mask.
float pixel_accuracy(const Segmenter& seg, std::span<const MaskedImage> set);

/// Moves min(k, |test_set|) uniformly sampled images into train_set with
/// predicted masks and pseudo provenance. Returns the moved ids.
std::vector<std::string> pseudo_label_round(const Segmenter& seg, PseudoLabelPool& pool, std::mt19937_64& rng);

struct Algorithm1Report {
    int rounds = 0;
    std::vector<std::size_t> round_sizes;
    std::vector<float> final_epoch_losses;
};

/// Called after every pool mutation with the 1-based round number.
using RoundObserver = std::function<void(const PseudoLabelPool&, int)>;

/// Semi-supervised segmenter training: while unlabeled images remain, train
/// on the current mask-labeled set, then pseudo-label a random batch of k and
/// merge it in. A last training pass runs on the completed set.
Algorithm1Report run_algorithm1(Segmenter& seg, PseudoLabelPool& pool, int epochs_per_round, std::uint64_t seed,
                                const RoundObserver& observer = {});

}  // namespace attnfuse::semisup
