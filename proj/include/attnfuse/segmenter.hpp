#pragma once

#include <cstdint>
#include <vector>

#include "attnfuse/binder.hpp"
#include "attnfuse/ops.hpp"
#include "attnfuse/vision.hpp"

namespace attnfuse::semisup {

struct SegmenterConfig {
    int input_size = 224;
    int base_channels = 4;
    float learning_rate = 0.05f;
    float momentum = 0.9f;
    float weight_decay = 1e-4f;
    int batch_size = 8;
    std::uint64_t seed = 0;
    float input_mean = 0.5f;
    float input_std = 0.25f;
    // Weight of lesion pixels in the training loss; lesions are a small
    // share of each image.
    float positive_weight = 5.0f;

    void validate() const;
};

/// Small three-level encoder-decoder with skip connections. Output is a
/// per-pixel lesion probability map the size of the input.
class Segmenter {
public:
    Segmenter() = default;
    explicit Segmenter(const SegmenterConfig& cfg);

    const SegmenterConfig& config() const noexcept { return cfg_; }
    std::vector<Parameter>& params() noexcept { return params_; }
    const std::vector<Parameter>& params() const noexcept { return params_; }
    std::vector<Parameter*> parameters();

    /// img [1,S,S] -> probabilities [1,S,S].
    template <class T>
    Var forward(ParamBinder<T>& binder, Var img) const {
        auto& tape = binder.tape();
        const auto& s = tape.value(img).shape();
        if (s.size() != 3 || s[0] != 1 || s[1] != cfg_.input_size || s[2] != cfg_.input_size) {
            throw DimensionError("segmenter expects [1," + std::to_string(cfg_.input_size) + "," +
                                 std::to_string(cfg_.input_size) + "], got " + shape_string(s));
        }
        auto conv = [&](std::size_t layer, Var in, int pad) {
            return ops::conv2d(tape, in, binder.bind(params_[2 * layer]), binder.bind(params_[2 * layer + 1]), 1, pad);
        };
        Var x = ops::affine(tape, img, static_cast<T>(cfg_.input_mean), static_cast<T>(1.0f / cfg_.input_std));
        Var e1 = ops::relu(tape, conv(0, x, 1));
        Var e2 = ops::relu(tape, conv(1, ops::maxpool2d(tape, e1, 2, 2), 1));
        Var mid = ops::relu(tape, conv(2, ops::maxpool2d(tape, e2, 2, 2), 1));
        Var d2 = ops::relu(tape, conv(3, ops::concat(tape, {ops::upsample2x(tape, mid), e2}), 1));
        Var d1 = ops::relu(tape, conv(4, ops::concat(tape, {ops::upsample2x(tape, d2), e1}), 1));
        return ops::sigmoid(tape, conv(5, d1, 0));
    }

    /// Probability map for an image; images of another size are resized
    /// in and the map resized back out.
    vision::GrayImage predict_probs(const vision::GrayImage& img) const;

    /// predict_probs binarized at 0.5 (strictly greater).
    vision::BinaryMask predict_mask(const vision::GrayImage& img) const;

private:
    SegmenterConfig cfg_;
    std::vector<Parameter> params_;
};

}  // namespace attnfuse::semisup
