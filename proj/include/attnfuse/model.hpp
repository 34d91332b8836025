#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "attnfuse/binder.hpp"
#include "attnfuse/ops.hpp"
#include "attnfuse/vision.hpp"

namespace attnfuse::model {

/// Plain conv/relu/maxpool stack standing in for a large classification
/// backbone. Inputs are standardized first. Each stage runs `blocks_per_stage` 3x3 convolutions followed by a
/// 2x2 max pool; a final 3x3 conv with relu produces K = final_channels maps.
struct BackboneConfig {
    std::vector<int> stage_channels{8, 16, 32};
    int blocks_per_stage = 1;
    int final_channels = 32;
    int input_size = 224;
    int in_channels = 1;
    // Pixels enter the first conv as (x - input_mean) / input_std.
    float input_mean = 0.5f;
    float input_std = 0.25f;

    void validate() const;
    /// Side length of the last activation map.
    int feature_size() const { return input_size >> stage_channels.size(); }
};

using attnfuse::ParamBinder;

class Backbone {
public:
    Backbone() = default;
    Backbone(const BackboneConfig& cfg, const std::string& prefix, std::mt19937_64& rng);

    const BackboneConfig& config() const noexcept { return cfg_; }
    std::vector<Parameter>& params() noexcept { return params_; }
    const std::vector<Parameter>& params() const noexcept { return params_; }

    /// img [C,S,S] -> last activations [K, S/2^n, S/2^n], post-relu.
    template <class T>
    Var forward(ParamBinder<T>& binder, Var img) const {
        auto& tape = binder.tape();
        const auto& s = tape.value(img).shape();
        if (s.size() != 3 || s[0] != cfg_.in_channels || s[1] != cfg_.input_size || s[2] != cfg_.input_size) {
            throw DimensionError("backbone expects input [" + std::to_string(cfg_.in_channels) + "," +
                                 std::to_string(cfg_.input_size) + "," + std::to_string(cfg_.input_size) +
                                 "], got " + shape_string(s));
        }
        Var x = ops::affine(tape, img, static_cast<T>(cfg_.input_mean), static_cast<T>(1.0f / cfg_.input_std));
        std::size_t p = 0;
        auto conv_relu = [&](Var in) {
            Var w = binder.bind(params_[p]);
            Var b = binder.bind(params_[p + 1]);
            p += 2;
            return ops::relu(tape, ops::conv2d(tape, in, w, b, 1, 1));
        };
        for (std::size_t stage = 0; stage < cfg_.stage_channels.size(); ++stage) {
            for (int blk = 0; blk < cfg_.blocks_per_stage; ++blk) x = conv_relu(x);
            x = ops::maxpool2d(tape, x, 2, 2);
        }
        return conv_relu(x);
    }

private:
    BackboneConfig cfg_;
    std::vector<Parameter> params_;
};

enum class BranchName { global, heatmap, infected, fusion };

inline constexpr std::array<BranchName, 4> kAllBranches{BranchName::global, BranchName::heatmap,
                                                       BranchName::infected, BranchName::fusion};

std::string to_string(BranchName b);
BranchName branch_from_string(const std::string& s);

struct Head {
    Parameter weight;  // [C, D]
    Parameter bias;    // [C]

    int input_dim() const { return weight.value.dim(1); }

    template <class T>
    Var forward(ParamBinder<T>& binder, Var features) const {
        return ops::fully_connected(binder.tape(), features, binder.bind(weight), binder.bind(bias));
    }
};

/// One classification stream: a backbone (absent for fusion) and an FC head.
struct Branch {
    BranchName name = BranchName::global;
    Backbone backbone;
    Head head;

    std::vector<Parameter*> parameters();
    std::vector<const Parameter*> parameters() const;
};

template <class T>
struct BranchVars {
    Var activations;
    Var pool;
    Var logits;
};

/// backbone -> global average pool -> head.
template <class T>
BranchVars<T> branch_forward(ParamBinder<T>& binder, const Branch& branch, Var img) {
    BranchVars<T> out;
    out.activations = branch.backbone.forward(binder, img);
    out.pool = ops::global_avg_pool(binder.tape(), out.activations);
    out.logits = branch.head.forward(binder, out.pool);
    return out;
}

/// Infected stream: shared backbone over left and right crops, then
/// Pool_in = [pool_left, pool_right, pool_global] -> head.
template <class T>
BranchVars<T> infected_forward(ParamBinder<T>& binder, const Branch& branch, Var left, Var right, Var pool_global) {
    auto& tape = binder.tape();
    Var pl = ops::global_avg_pool(tape, branch.backbone.forward(binder, left));
    Var pr = ops::global_avg_pool(tape, branch.backbone.forward(binder, right));
    BranchVars<T> out;
    out.pool = ops::concat(tape, {pl, pr, pool_global});
    out.logits = branch.head.forward(binder, out.pool);
    return out;
}

/// Pool_f = [Pool_g, Pool_h, Pool_in] -> fusion head.
template <class T>
Var fusion_forward(ParamBinder<T>& binder, const Head& head, Var pool_g, Var pool_h, Var pool_in) {
    Var pool_f = ops::concat(binder.tape(), {pool_g, pool_h, pool_in});
    return head.forward(binder, pool_f);
}

struct ModelConfig {
    BackboneConfig backbone;
    int num_classes = 2;
    float tau = 0.75f;
    std::uint64_t seed = 0;

    void validate() const;
};

/// Global, heat-map and infected streams plus the fusion head.
class MultiStreamModel {
public:
    MultiStreamModel() = default;
    explicit MultiStreamModel(const ModelConfig& cfg);

    const ModelConfig& config() const noexcept { return cfg_; }
    void set_tau(float tau);
    int num_classes() const noexcept { return cfg_.num_classes; }
    int feature_dim() const noexcept { return cfg_.backbone.final_channels; }

    Branch& branch(BranchName b);
    const Branch& branch(BranchName b) const;

    /// Every parameter in checkpoint order: global, heatmap, infected, fusion.
    std::vector<Parameter*> parameters();
    std::vector<const Parameter*> parameters() const;
    std::vector<Parameter*> parameters_of(BranchName b);

    /// Marks every branch in `trainable` unfrozen and all others frozen.
    void set_trainable(std::span<const BranchName> trainable);

private:
    ModelConfig cfg_;
    Branch global_;
    Branch heatmap_;
    Branch infected_;
    Branch fusion_;
};

/// Label vector for a binary COVID label: C=1 -> [y]; C=2 -> [1-y, y].
Tensor label_vector(int label, int num_classes);

/// Probability of the positive (COVID) class.
float positive_score(const Tensor& probs);

/// C=1: p > 0.5; C=2: argmax, ties resolved to the negative class.
int predict_label(const Tensor& probs);

Tensor sigmoid_normalize(const Tensor& logits);

struct GlobalOutput {
    Tensor activations;
    Tensor pool;
    Tensor logits;
};

struct HeatCrop {
    vision::HeatMap heatmap;
    vision::BinaryMask mask;
    std::optional<vision::BinaryMask> region;
    vision::BoundingBox box;  // image coordinates
    vision::GrayImage crop;
    bool fallback = false;
};

struct BranchOutput {
    Tensor pool;
    Tensor logits;
};

/// Heat-map normalization, thresholding at tau, largest region, and the crop
/// of the matching image area resized to out_size. An empty region falls back
/// to the full image.
HeatCrop heat_crop(const Tensor& activations, const vision::GrayImage& img, float tau, int out_size);

GlobalOutput forward_global(const MultiStreamModel& m, const vision::GrayImage& img);
BranchOutput forward_heatmap(const MultiStreamModel& m, const vision::GrayImage& img);
BranchOutput forward_heatmap(const MultiStreamModel& m, const vision::GrayImage& img, const Tensor& global_activations);
BranchOutput forward_infected(const MultiStreamModel& m, const vision::GrayImage& img,
                              const vision::BinaryMask& seg_mask, const Tensor& pool_g);
BranchOutput forward_infected_crops(const MultiStreamModel& m, const vision::GrayImage& left,
                                    const vision::GrayImage& right, const Tensor& pool_g);
Tensor forward_fusion(const MultiStreamModel& m, const Tensor& pool_g, const Tensor& pool_h, const Tensor& pool_in);

struct FullOutput {
    GlobalOutput global;
    BranchOutput heatmap;
    BranchOutput infected;
    Tensor pool_fusion;
    Tensor fusion_logits;

    const Tensor& logits(BranchName b) const;
};

FullOutput forward_all(const MultiStreamModel& m, const vision::GrayImage& img, const vision::BinaryMask& seg_mask);

/// Class activation map: sum_k w[class,k] * f_k(x,y), min-max normalized to
/// [0,1] (a flat map renders as all zeros). `head_weight` is [C,K].
vision::HeatMap cam(const Tensor& activations, int class_idx, const Tensor& head_weight);

/// Raw (unnormalized) CAM values.
std::vector<float> cam_raw(const Tensor& activations, int class_idx, const Tensor& head_weight);

}  // namespace attnfuse::model
