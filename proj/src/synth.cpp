#include "attnfuse/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <optional>
#include <random>

#include "attnfuse/errors.hpp"
#include "attnfuse/image_io.hpp"

namespace attnfuse::io {

void SynthConfig::validate() const {
    if (n <= 0 || n % 2 != 0) throw ValidationError("synth: n must be positive and even, got " + std::to_string(n));
    if (size < 32) throw ValidationError("synth: size must be at least 32, got " + std::to_string(size));
    if (unlabeled < 0) throw ValidationError("synth: unlabeled count must be non-negative");
    auto frac = [](double f, const char* what) {
        if (!(f >= 0.0 && f < 1.0)) throw RangeError(std::string("synth: ") + what + " must be in [0,1)");
    };
    frac(test_fraction, "test_fraction");
    frac(val_fraction, "val_fraction");
    frac(seed_mask_fraction, "seed_mask_fraction");
    if (test_fraction + val_fraction >= 1.0) throw RangeError("synth: test and val fractions leave no train rows");
}

namespace {

double uniform(std::mt19937_64& rng, double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); }

struct Disc {
    double cy, cx, r, amp;
};

}  // namespace

SynthSample synth_sample(int size, bool positive, std::mt19937_64& rng) {
    const double s = size;
    const double cy = s / 2 + uniform(rng, -s / 16, s / 16);
    const double cx = s / 2 + uniform(rng, -s / 16, s / 16);
    const double ay = uniform(rng, 0.26, 0.34) * s;
    const double ax = uniform(rng, 0.32, 0.40) * s;
    const double background = uniform(rng, 0.50, 0.60);
    const double lung = uniform(rng, 0.15, 0.21);

    auto in_ellipse = [&](double y, double x) {
        const double dy = (y - cy) / ay, dx = (x - cx) / ax;
        return dy * dy + dx * dx <= 1.0;
    };

    // Lesions: discs that fit entirely inside the lung field.
    std::vector<Disc> blobs;
    if (positive) {
        const int count = std::uniform_int_distribution<int>(1, 3)(rng);
        while (static_cast<int>(blobs.size()) < count) {
            const double r = uniform(rng, s / 24, s / 10);
            const double y = uniform(rng, cy - ay, cy + ay);
            const double x = uniform(rng, cx - ax, cx + ax);
            const double dy = (y - cy) / (ay - r), dx = (x - cx) / (ax - r);
            if (dy * dy + dx * dx > 1.0) continue;
            blobs.push_back({y, x, r, uniform(rng, 0.25, 0.45)});
        }
    }

    // Small vessel-like dots in every lung, and sometimes a bright patch
    // outside it, so brightness alone does not give the label away.
    std::vector<Disc> dots;
    const int ndots = std::uniform_int_distribution<int>(3, 6)(rng);
    while (static_cast<int>(dots.size()) < ndots) {
        const double y = uniform(rng, cy - ay, cy + ay), x = uniform(rng, cx - ax, cx + ax);
        if (in_ellipse(y, x)) dots.push_back({y, x, 1.0, uniform(rng, 0.15, 0.25)});
    }
    std::optional<Disc> patch;
    if (std::bernoulli_distribution(0.5)(rng)) {
        for (int attempt = 0; attempt < 100 && !patch; ++attempt) {
            const double r = uniform(rng, s / 24, s / 12);
            const double y = uniform(rng, r, s - r), x = uniform(rng, r, s - r);
            bool clear = true;
            for (double a = 0; a < 2 * M_PI && clear; a += M_PI / 8) {
                clear = !in_ellipse(y + (r + 1) * std::sin(a), x + (r + 1) * std::cos(a));
            }
            if (clear && !in_ellipse(y, x)) patch = Disc{y, x, r, uniform(rng, 0.3, 0.4)};
        }
    }

    std::normal_distribution<double> noise(0.0, 0.04);
    vision::GrayImage img(size, size, 0.0f);
    vision::BinaryMask lesion(size, size), ellipse(size, size);
    for (int r = 0; r < size; ++r) {
        for (int c = 0; c < size; ++c) {
            const double y = r + 0.5, x = c + 0.5;
            const bool inside = in_ellipse(y, x);
            ellipse.set(r, c, inside);
            double v = inside ? lung : background;
            if (inside) {
                for (const auto& d : dots) {
                    if (std::hypot(y - d.cy, x - d.cx) <= d.r) v += d.amp;
                }
                for (const auto& b : blobs) {
                    const double t = std::hypot(y - b.cy, x - b.cx) / b.r;
                    if (t <= 1.0) {
                        v += b.amp * (1.0 - 0.5 * t * t);
                        lesion.set(r, c, true);
                    }
                }
            } else if (patch && std::hypot(y - patch->cy, x - patch->cx) <= patch->r) {
                v += patch->amp;
            }
            v += noise(rng);
            img.at(r, c) = static_cast<float>(quantize(static_cast<float>(v))) / 255.0f;
        }
    }
    // A blob too small to cover any pixel center would leave a positive
    // without a mask; mark its center pixel instead.
    for (const auto& b : blobs) {
        const int r = std::clamp(static_cast<int>(b.cy), 0, size - 1);
        const int c = std::clamp(static_cast<int>(b.cx), 0, size - 1);
        if (ellipse.at(r, c)) lesion.set(r, c, true);
    }
    SynthSample out{std::move(img), std::move(lesion), std::move(ellipse), positive ? 1 : 0,
                    static_cast<int>(blobs.size()), patch.has_value()};
    return out;
}

SynthDataset generate_synthetic(const SynthConfig& cfg) {
    cfg.validate();
    std::mt19937_64 rng(cfg.seed);
    const int total = cfg.n + cfg.unlabeled;
    SynthDataset ds;
    ds.samples.reserve(total);
    ds.rows.resize(total);

    // Labels alternate so every prefix stays balanced.
    for (int i = 0; i < cfg.n; ++i) ds.samples.push_back(synth_sample(cfg.size, i % 2 == 1, rng));
    for (int i = 0; i < cfg.unlabeled; ++i) {
        ds.samples.push_back(synth_sample(cfg.size, std::bernoulli_distribution(0.5)(rng), rng));
    }

    for (int label = 0; label <= 1; ++label) {
        std::vector<int> idx;
        for (int i = label; i < cfg.n; i += 2) idx.push_back(i);
        std::shuffle(idx.begin(), idx.end(), rng);
        const int per = static_cast<int>(idx.size());
        const int n_test = static_cast<int>(std::lround(per * cfg.test_fraction));
        const int n_val = static_cast<int>(std::lround(per * cfg.val_fraction));
        const int n_train = per - n_test - n_val;
        const int n_seed = static_cast<int>(std::lround(n_train * cfg.seed_mask_fraction));
        for (int j = 0; j < per; ++j) {
            auto& row = ds.rows[idx[j]];
            row.role = Role::labeled_only;
            if (j < n_test) {
                row.split = Split::test;
            } else if (j < n_test + n_val) {
                row.split = Split::val;
            } else {
                row.split = Split::train;
                if (j < n_test + n_val + n_seed) row.role = Role::seed_masked;
            }
        }
    }
    for (int i = cfg.n; i < total; ++i) {
        ds.rows[i].split = Split::train;
        ds.rows[i].role = Role::unlabeled;
    }

    char buf[64];
    for (int i = 0; i < total; ++i) {
        auto& row = ds.rows[i];
        std::snprintf(buf, sizeof buf, "images/img_%04d.pgm", i);
        row.image_path = buf;
        row.label = ds.samples[i].label;
        if (row.role == Role::seed_masked) {
            std::snprintf(buf, sizeof buf, "masks/mask_%04d.pgm", i);
            row.mask_path = std::string(buf);
        }
    }
    return ds;
}

std::filesystem::path write_synthetic(const SynthDataset& ds, const std::filesystem::path& dir) {
    char buf[64];
    for (std::size_t i = 0; i < ds.samples.size(); ++i) {
        std::snprintf(buf, sizeof buf, "images/img_%04zu.pgm", i);
        write_pgm(dir / buf, ds.samples[i].image);
        std::snprintf(buf, sizeof buf, "masks/mask_%04zu.pgm", i);
        write_mask_pgm(dir / buf, ds.samples[i].lesion);
    }
    std::vector<ManifestRow> rows = ds.rows;
    for (auto& r : rows) {
        r.resolved_image = dir / r.image_path;
        if (r.mask_path) r.resolved_mask = dir / *r.mask_path;
    }
    const auto path = dir / "manifest.csv";
    write_manifest(path, rows);
    return path;
}

}  // namespace attnfuse::io
