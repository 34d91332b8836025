#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace attnfuse::evalviz {

struct TsneConfig {
    double perplexity = 30.0;
    int iterations = 1000;
    double early_exaggeration = 12.0;
    int exaggeration_iterations = 250;
    double learning_rate = 200.0;
    double initial_momentum = 0.5;
    double final_momentum = 0.8;
    std::uint64_t seed = 0;
};

struct Embedding3D {
    std::vector<std::array<double, 3>> points;
    std::vector<int> labels;
    std::vector<std::string> ids;
    double initial_kl = 0.0;
    double final_kl = 0.0;
};

/// Exact (O(n^2)) t-SNE into three dimensions. Points are processed in sorted
/// feature order and each start position is seeded from a hash of its feature
/// vector, so reordering the input reorders the output the same way, bitwise.
Embedding3D tsne_embed(std::span<const std::vector<float>> features, const TsneConfig& cfg);

/// Symmetrized joint affinities P (row-major n×n) with per-point Gaussian
/// bandwidths found by bisection to match the perplexity.
std::vector<double> joint_affinities(std::span<const std::vector<float>> features, double perplexity);

/// KL(P || Q) for an embedding.
double kl_divergence(std::span<const double> p, std::span<const std::array<double, 3>> y);

}  // namespace attnfuse::evalviz
