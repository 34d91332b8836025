#include "attnfuse/segmenter.hpp"

#include <cmath>
#include <random>

namespace attnfuse::semisup {

void SegmenterConfig::validate() const {
    if (input_size < 4 || input_size % 4 != 0) throw ConfigError("segmenter: input_size must be a multiple of 4");
    if (base_channels < 1) throw ConfigError("segmenter: base_channels must be >= 1");
    if (!(learning_rate > 0.0f)) throw ConfigError("segmenter: learning_rate must be > 0");
    if (!(momentum >= 0.0f && momentum < 1.0f)) throw ConfigError("segmenter: momentum must be in [0,1)");
    if (batch_size < 1) throw ConfigError("segmenter: batch_size must be >= 1");
    if (!(input_std > 0.0f)) throw ConfigError("segmenter: input_std must be > 0");
    if (!(positive_weight > 0.0f)) throw ConfigError("segmenter: positive_weight must be > 0");
}

Segmenter::Segmenter(const SegmenterConfig& cfg) : cfg_(cfg) {
    cfg_.validate();
    std::mt19937_64 rng(cfg_.seed ^ 0x5e63e77e5ULL);
    const int c = cfg_.base_channels;
    const struct {
        int out, in, k;
    } layers[] = {{c, 1, 3}, {2 * c, c, 3}, {4 * c, 2 * c, 3}, {2 * c, 6 * c, 3}, {c, 3 * c, 3}, {1, c, 1}};
    int idx = 0;
    for (const auto& l : layers) {
        Tensor w({l.out, l.in, l.k, l.k});
        std::normal_distribution<float> dist(0.0f, std::sqrt(2.0f / static_cast<float>(l.in * l.k * l.k)));
        for (auto& v : w.data()) v = dist(rng);
        const std::string base = "segmenter.conv" + std::to_string(idx++);
        params_.emplace_back(base + ".weight", std::move(w));
        Parameter b(base + ".bias", Tensor({l.out}));
        b.is_bias = true;
        params_.push_back(std::move(b));
    }
    // Lesions are a small fraction of pixels; start the output biased toward background.
    params_.back().value.fill(-2.0f);
}

std::vector<Parameter*> Segmenter::parameters() {
    std::vector<Parameter*> out;
    for (auto& p : params_) out.push_back(&p);
    return out;
}

vision::GrayImage Segmenter::predict_probs(const vision::GrayImage& img) const {
    const int s = cfg_.input_size;
    const bool resize = img.height() != s || img.width() != s;
    const vision::GrayImage in = resize ? vision::resize_bilinear(img, s, s) : img;
    Tape<float> tape;
    ParamBinder<float> binder(tape, false);
    const Var out = forward(binder, tape.constant(in.to_tensor()));
    const auto& v = tape.value(out);
    vision::GrayImage probs(s, s, std::vector<float>(v.data().begin(), v.data().end()));
    return resize ? vision::resize_bilinear(probs, img.height(), img.width()) : probs;
}

vision::BinaryMask Segmenter::predict_mask(const vision::GrayImage& img) const {
    const auto probs = predict_probs(img);
    vision::BinaryMask m(probs.height(), probs.width());
    for (int r = 0; r < probs.height(); ++r)
        for (int c = 0; c < probs.width(); ++c) m.set(r, c, probs.at(r, c) > 0.5f);
    return m;
}

}  // namespace attnfuse::semisup
