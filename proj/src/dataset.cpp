#include "attnfuse/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "attnfuse/errors.hpp"
#include "attnfuse/image_io.hpp"

namespace attnfuse::io {

std::vector<Sample> load_samples(const Manifest& manifest, int input_size) {
    if (input_size <= 0) throw ValidationError("load_samples: input size must be positive");
    std::vector<Sample> out;
    out.reserve(manifest.rows.size());
    for (const auto& row : manifest.rows) {
        Sample s;
        s.id = row.image_path;
        auto img = read_pgm(row.resolved_image);
        s.image = (img.height() == input_size && img.width() == input_size)
                      ? std::move(img)
                      : vision::resize_bilinear(img, input_size, input_size);
        s.label = row.label;
        if (row.resolved_mask) s.mask = vision::resize_nearest(read_mask_pgm(*row.resolved_mask), input_size, input_size);
        s.split = row.split;
        s.role = row.role;
        out.push_back(std::move(s));
    }
    return out;
}

SplitIndices classification_splits(const std::vector<Sample>& samples, double val_fraction, std::uint64_t seed) {
    SplitIndices out;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        if (samples[i].role == Role::unlabeled) continue;
        switch (samples[i].split) {
            case Split::train: out.train.push_back(i); break;
            case Split::val: out.val.push_back(i); break;
            case Split::test: out.test.push_back(i); break;
        }
    }
    if (out.val.empty() && !out.train.empty()) {
        std::mt19937_64 rng(seed);
        std::vector<std::size_t> keep;
        for (int label = 0; label <= 1; ++label) {
            std::vector<std::size_t> cls;
            for (auto i : out.train)
                if (samples[i].label == label) cls.push_back(i);
            std::shuffle(cls.begin(), cls.end(), rng);
            const auto n_val = static_cast<std::size_t>(std::lround(static_cast<double>(cls.size()) * val_fraction));
            out.val.insert(out.val.end(), cls.begin(), cls.begin() + static_cast<std::ptrdiff_t>(n_val));
            keep.insert(keep.end(), cls.begin() + static_cast<std::ptrdiff_t>(n_val), cls.end());
        }
        std::sort(out.val.begin(), out.val.end());
        std::sort(keep.begin(), keep.end());
        out.train = std::move(keep);
    }
    if (out.train.empty()) throw ValidationError("manifest has no labeled train rows");
    if (out.val.empty()) throw ValidationError("manifest leaves no validation rows");
    return out;
}

semisup::PseudoLabelPool segmentation_pool(const std::vector<Sample>& samples, int k) {
    semisup::PseudoLabelPool pool;
    pool.k = k;
    for (const auto& s : samples) {
        if (s.role == Role::seed_masked) {
            pool.train_set.push_back({s.id, s.image, *s.mask, semisup::Provenance::seed});
        } else {
            pool.test_set.push_back({s.id, s.image});
        }
    }
    if (pool.train_set.empty()) throw ValidationError("manifest has no seed-masked rows to train the segmenter");
    pool.check_partition();
    return pool;
}

std::vector<trainer::Example> make_examples(const std::vector<Sample>& samples, const std::vector<std::size_t>& idx,
                                            const semisup::Segmenter& seg) {
    std::vector<trainer::Example> out;
    out.reserve(idx.size());
    for (auto i : idx) {
        const auto& s = samples[i];
        out.push_back({s.id, s.image, s.label, seg.predict_mask(s.image)});
    }
    return out;
}

}  // namespace attnfuse::io
