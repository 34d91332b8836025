#include "attnfuse/tsne.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>
#include <random>

#include "attnfuse/errors.hpp"

namespace attnfuse::evalviz {

namespace {

constexpr double kMinProb = 1e-12;

std::uint64_t hash_features(const std::vector<float>& f, std::uint64_t seed) {
    std::uint64_t h = 1469598103934665603ULL ^ seed;
    for (float v : f) {
        std::uint32_t bits;
        std::memcpy(&bits, &v, sizeof bits);
        for (int b = 0; b < 4; ++b) {
            h ^= (bits >> (8 * b)) & 0xFFu;
            h *= 1099511628211ULL;
        }
    }
    return h;
}

std::vector<double> squared_distances(std::span<const std::vector<float>> x) {
    const std::size_t n = x.size();
    std::vector<double> d(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            double s = 0.0;
            for (std::size_t k = 0; k < x[i].size(); ++k) {
                const double diff = static_cast<double>(x[i][k]) - static_cast<double>(x[j][k]);
                s += diff * diff;
            }
            d[i * n + j] = d[j * n + i] = s;
        }
    }
    return d;
}

}  // namespace

std::vector<double> joint_affinities(std::span<const std::vector<float>> features, double perplexity) {
    const std::size_t n = features.size();
    const auto dist = squared_distances(features);
    const double target = std::log(perplexity);
    std::vector<double> p(n * n, 0.0);
    std::vector<double> row(n);
    for (std::size_t i = 0; i < n; ++i) {
        double beta = 1.0, lo = 0.0, hi = std::numeric_limits<double>::infinity();
        for (int iter = 0; iter < 200; ++iter) {
            double sum = 0.0;
            for (std::size_t j = 0; j < n; ++j) {
                row[j] = j == i ? 0.0 : std::exp(-beta * dist[i * n + j]);
                sum += row[j];
            }
            if (sum <= 0.0) sum = std::numeric_limits<double>::min();
            double weighted = 0.0;
            for (std::size_t j = 0; j < n; ++j) weighted += beta * dist[i * n + j] * row[j];
            const double entropy = std::log(sum) + weighted / sum;
            for (std::size_t j = 0; j < n; ++j) row[j] /= sum;
            const double diff = entropy - target;
            if (std::abs(diff) < 1e-5) break;
            if (diff > 0) {
                lo = beta;
                beta = std::isinf(hi) ? beta * 2.0 : (beta + hi) / 2.0;
            } else {
                hi = beta;
                beta = (beta + lo) / 2.0;
            }
        }
        for (std::size_t j = 0; j < n; ++j) p[i * n + j] = row[j];
    }
    std::vector<double> sym(n * n, 0.0);
    const double norm = 2.0 * static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            if (i != j) sym[i * n + j] = std::max((p[i * n + j] + p[j * n + i]) / norm, kMinProb);
    return sym;
}

double kl_divergence(std::span<const double> p, std::span<const std::array<double, 3>> y) {
    const std::size_t n = y.size();
    std::vector<double> q(n * n, 0.0);
    double sum_q = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            if (i == j) continue;
            double d = 0.0;
            for (int k = 0; k < 3; ++k) d += (y[i][k] - y[j][k]) * (y[i][k] - y[j][k]);
            q[i * n + j] = 1.0 / (1.0 + d);
            sum_q += q[i * n + j];
        }
    double kl = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            if (i == j) continue;
            const double pij = p[i * n + j];
            const double qij = std::max(q[i * n + j] / sum_q, kMinProb);
            kl += pij * std::log(pij / qij);
        }
    return std::max(kl, 0.0);
}

namespace {

Embedding3D embed_in_order(std::span<const std::vector<float>> features, const TsneConfig& cfg) {
    const std::size_t n = features.size();
    const auto p = joint_affinities(features, cfg.perplexity);
    Embedding3D out;
    out.points.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        std::mt19937_64 rng(hash_features(features[i], cfg.seed));
        std::normal_distribution<double> g(0.0, 1e-4);
        for (int k = 0; k < 3; ++k) out.points[i][k] = g(rng);
    }
    auto& y = out.points;
    out.initial_kl = kl_divergence(p, y);

    std::vector<std::array<double, 3>> velocity(n, {0.0, 0.0, 0.0});
    std::vector<std::array<double, 3>> gains(n, {1.0, 1.0, 1.0});
    std::vector<std::array<double, 3>> grad(n);
    std::vector<double> num(n * n);
    for (int iter = 0; iter < cfg.iterations; ++iter) {
        const bool exaggerate = iter < cfg.exaggeration_iterations;
        const double ex = exaggerate ? cfg.early_exaggeration : 1.0;
        const double mom = exaggerate ? cfg.initial_momentum : cfg.final_momentum;

        double sum_q = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            num[i * n + i] = 0.0;
            for (std::size_t j = i + 1; j < n; ++j) {
                double d = 0.0;
                for (int k = 0; k < 3; ++k) d += (y[i][k] - y[j][k]) * (y[i][k] - y[j][k]);
                const double q = 1.0 / (1.0 + d);
                num[i * n + j] = num[j * n + i] = q;
                sum_q += 2.0 * q;
            }
        }
        for (std::size_t i = 0; i < n; ++i) {
            std::array<double, 3> gi{0.0, 0.0, 0.0};
            for (std::size_t j = 0; j < n; ++j) {
                if (i == j) continue;
                const double q = num[i * n + j];
                const double mult = (ex * p[i * n + j] - q / sum_q) * q;
                for (int k = 0; k < 3; ++k) gi[k] += mult * (y[i][k] - y[j][k]);
            }
            for (int k = 0; k < 3; ++k) grad[i][k] = 4.0 * gi[k];
        }
        for (std::size_t i = 0; i < n; ++i) {
            for (int k = 0; k < 3; ++k) {
                double& gain = gains[i][k];
                gain = (grad[i][k] > 0) != (velocity[i][k] > 0) ? gain + 0.2 : gain * 0.8;
                gain = std::max(gain, 0.01);
                velocity[i][k] = mom * velocity[i][k] - cfg.learning_rate * gain * grad[i][k];
                y[i][k] += velocity[i][k];
            }
        }
        std::array<double, 3> mean{0.0, 0.0, 0.0};
        for (const auto& pt : y)
            for (int k = 0; k < 3; ++k) mean[k] += pt[k];
        for (auto& pt : y)
            for (int k = 0; k < 3; ++k) pt[k] -= mean[k] / static_cast<double>(n);
    }
    out.final_kl = kl_divergence(p, y);
    return out;
}

}  // namespace

Embedding3D tsne_embed(std::span<const std::vector<float>> features, const TsneConfig& cfg) {
    const std::size_t n = features.size();
    if (n < 5) throw ValidationError("tsne: need at least 5 points, got " + std::to_string(n));
    if (!(cfg.perplexity > 0.0) || cfg.perplexity >= static_cast<double>(n) / 3.0) {
        throw ValidationError("tsne: perplexity must be in (0, n/3) for n = " + std::to_string(n));
    }
    if (cfg.iterations < 1) throw ValidationError("tsne: iterations must be >= 1");
    const std::size_t dim = features[0].size();
    for (const auto& f : features)
        if (f.size() != dim) throw DimensionError("tsne: feature vectors differ in length");

    // Run in a canonical (sorted) order so floating-point sums do not depend
    // on how the caller ordered the points.
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return std::lexicographical_compare(features[a].begin(), features[a].end(), features[b].begin(),
                                            features[b].end());
    });
    std::vector<std::vector<float>> sorted;
    sorted.reserve(n);
    for (std::size_t i : order) sorted.push_back(features[i]);
    const auto canon = embed_in_order(sorted, cfg);

    Embedding3D out;
    out.points.resize(n);
    for (std::size_t k = 0; k < n; ++k) out.points[order[k]] = canon.points[k];
    out.initial_kl = canon.initial_kl;
    out.final_kl = canon.final_kl;
    return out;
}

}  // namespace attnfuse::evalviz
