#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <vector>

#include "attnfuse/manifest.hpp"
#include "attnfuse/vision.hpp"

namespace attnfuse::io {

struct SynthConfig {
    int n = 400;
    int size = 64;
    std::uint64_t seed = 0;
    double test_fraction = 0.25;
    // Zero leaves validation to be carved out of train at training time.
    double val_fraction = 0.0;
    // Share of the train rows that carry a ground-truth mask.
    double seed_mask_fraction = 0.2;
    // Extra mask-less images outside the classification splits.
    int unlabeled = 0;

    void validate() const;
};

struct SynthSample {
    vision::GrayImage image;
    vision::BinaryMask lesion;   // empty for negatives
    vision::BinaryMask ellipse;  // lung field
    int label = 0;
    int blobs = 0;
    bool distractor = false;
};

/// One image. Pixel values are already 8-bit quantized, so writing and
/// reading back a PGM reproduces them exactly.
SynthSample synth_sample(int size, bool positive, std::mt19937_64& rng);

struct SynthDataset {
    std::vector<SynthSample> samples;
    std::vector<ManifestRow> rows;  // one per sample, same order
};

/// Balanced classes with stratified test/val/train splits.
SynthDataset generate_synthetic(const SynthConfig& cfg);

/// Writes images/img_NNNN.pgm, masks/mask_NNNN.pgm and manifest.csv under
/// dir. Returns the manifest path.
std::filesystem::path write_synthetic(const SynthDataset& ds, const std::filesystem::path& dir);

}  // namespace attnfuse::io
