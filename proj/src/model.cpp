#include "attnfuse/model.hpp"

#include <algorithm>
#include <cmath>

namespace attnfuse::model {

void BackboneConfig::validate() const {
    if (stage_channels.empty()) throw ConfigError("backbone: stage_channels must not be empty");
    for (int c : stage_channels) {
        if (c < 1) throw ConfigError("backbone: stage channels must be >= 1");
    }
    if (blocks_per_stage < 1) throw ConfigError("backbone: blocks_per_stage must be >= 1");
    if (final_channels < 1) throw ConfigError("backbone: final_channels (K) must be >= 1");
    if (in_channels < 1) throw ConfigError("backbone: in_channels must be >= 1");
    if (!(input_std > 0.0f) || !std::isfinite(input_mean)) throw ConfigError("backbone: input_std must be positive");
    const int div = 1 << stage_channels.size();
    if (input_size < div || input_size % div != 0) {
        throw ConfigError("backbone: input_size " + std::to_string(input_size) + " must be a positive multiple of " +
                          std::to_string(div));
    }
}

namespace {

Parameter he_normal(const std::string& name, Shape shape, int fan_in, std::mt19937_64& rng) {
    Tensor t(std::move(shape));
    std::normal_distribution<float> dist(0.0f, std::sqrt(2.0f / static_cast<float>(fan_in)));
    for (auto& v : t.data()) v = dist(rng);
    return Parameter(name, std::move(t));
}

Parameter zero_bias(const std::string& name, int n) {
    Parameter p(name, Tensor({n}));
    p.is_bias = true;
    return p;
}

Head make_head(const std::string& prefix, int classes, int in_dim, std::mt19937_64& rng) {
    Head h;
    Tensor w({classes, in_dim});
    std::normal_distribution<float> dist(0.0f, 1.0f / std::sqrt(static_cast<float>(in_dim)));
    for (auto& v : w.data()) v = dist(rng);
    h.weight = Parameter(prefix + ".head.weight", std::move(w));
    h.bias = zero_bias(prefix + ".head.bias", classes);
    return h;
}

std::mt19937_64 stream_rng(std::uint64_t seed, std::uint64_t stream) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(stream)};
    return std::mt19937_64(seq);
}

}  // namespace

Backbone::Backbone(const BackboneConfig& cfg, const std::string& prefix, std::mt19937_64& rng) : cfg_(cfg) {
    cfg_.validate();
    int in = cfg_.in_channels;
    int idx = 0;
    auto add_conv = [&](int out) {
        const std::string base = prefix + ".conv" + std::to_string(idx++);
        params_.push_back(he_normal(base + ".weight", {out, in, 3, 3}, in * 9, rng));
        params_.push_back(zero_bias(base + ".bias", out));
        in = out;
    };
    for (int ch : cfg_.stage_channels)
        for (int b = 0; b < cfg_.blocks_per_stage; ++b) add_conv(ch);
    add_conv(cfg_.final_channels);
}

std::string to_string(BranchName b) {
    switch (b) {
        case BranchName::global: return "global";
        case BranchName::heatmap: return "heatmap";
        case BranchName::infected: return "infected";
        case BranchName::fusion: return "fusion";
    }
    return "unknown";
}

BranchName branch_from_string(const std::string& s) {
    for (BranchName b : kAllBranches) {
        if (to_string(b) == s) return b;
    }
    throw ValidationError("unknown branch name '" + s + "'");
}

std::vector<Parameter*> Branch::parameters() {
    std::vector<Parameter*> out;
    for (auto& p : backbone.params()) out.push_back(&p);
    out.push_back(&head.weight);
    out.push_back(&head.bias);
    return out;
}

std::vector<const Parameter*> Branch::parameters() const {
    std::vector<const Parameter*> out;
    for (const auto& p : backbone.params()) out.push_back(&p);
    out.push_back(&head.weight);
    out.push_back(&head.bias);
    return out;
}

void ModelConfig::validate() const {
    backbone.validate();
    if (num_classes != 1 && num_classes != 2) throw ConfigError("num_classes must be 1 or 2");
    if (!(tau >= 0.0f && tau <= 1.0f)) throw ConfigError("tau must be in [0,1]");
}

MultiStreamModel::MultiStreamModel(const ModelConfig& cfg) : cfg_(cfg) {
    cfg_.validate();
    const int k = cfg_.backbone.final_channels;
    const int c = cfg_.num_classes;
    const struct {
        Branch* branch;
        BranchName name;
        int head_dim;
    } layout[] = {
        {&global_, BranchName::global, k},
        {&heatmap_, BranchName::heatmap, k},
        {&infected_, BranchName::infected, 3 * k},
        {&fusion_, BranchName::fusion, k + k + 3 * k},
    };
    std::uint64_t stream = 0;
    for (const auto& l : layout) {
        auto rng = stream_rng(cfg_.seed, stream++);
        l.branch->name = l.name;
        const std::string prefix = to_string(l.name);
        if (l.name != BranchName::fusion) l.branch->backbone = Backbone(cfg_.backbone, prefix, rng);
        l.branch->head = make_head(prefix, c, l.head_dim, rng);
    }
}

void MultiStreamModel::set_tau(float tau) {
    if (!(tau >= 0.0f && tau <= 1.0f)) throw ConfigError("tau must be in [0,1]");
    cfg_.tau = tau;
}

Branch& MultiStreamModel::branch(BranchName b) {
    return const_cast<Branch&>(static_cast<const MultiStreamModel&>(*this).branch(b));
}

const Branch& MultiStreamModel::branch(BranchName b) const {
    switch (b) {
        case BranchName::global: return global_;
        case BranchName::heatmap: return heatmap_;
        case BranchName::infected: return infected_;
        case BranchName::fusion: return fusion_;
    }
    throw ValidationError("unknown branch");
}

std::vector<Parameter*> MultiStreamModel::parameters() {
    std::vector<Parameter*> out;
    for (BranchName b : kAllBranches) {
        auto ps = branch(b).parameters();
        out.insert(out.end(), ps.begin(), ps.end());
    }
    return out;
}

std::vector<const Parameter*> MultiStreamModel::parameters() const {
    std::vector<const Parameter*> out;
    for (BranchName b : kAllBranches) {
        auto ps = branch(b).parameters();
        out.insert(out.end(), ps.begin(), ps.end());
    }
    return out;
}

std::vector<Parameter*> MultiStreamModel::parameters_of(BranchName b) { return branch(b).parameters(); }

void MultiStreamModel::set_trainable(std::span<const BranchName> trainable) {
    for (BranchName b : kAllBranches) {
        const bool train = std::find(trainable.begin(), trainable.end(), b) != trainable.end();
        for (Parameter* p : parameters_of(b)) p->frozen = !train;
    }
}

Tensor label_vector(int label, int num_classes) {
    if (label != 0 && label != 1) throw ValidationError("label must be 0 or 1, got " + std::to_string(label));
    if (num_classes == 1) return Tensor({1}, std::vector<float>{static_cast<float>(label)});
    if (num_classes == 2) return Tensor({2}, std::vector<float>{label ? 0.0f : 1.0f, label ? 1.0f : 0.0f});
    throw ConfigError("num_classes must be 1 or 2");
}

float positive_score(const Tensor& probs) { return probs.size() == 1 ? probs[0] : probs[1]; }

int predict_label(const Tensor& probs) {
    if (probs.size() == 1) return probs[0] > 0.5f ? 1 : 0;
    return probs[1] > probs[0] ? 1 : 0;
}

Tensor sigmoid_normalize(const Tensor& logits) {
    Tensor out = logits;
    for (auto& v : out.data()) v = ops::sigmoid_scalar(v);
    return out;
}

HeatCrop heat_crop(const Tensor& activations, const vision::GrayImage& img, float tau, int out_size) {
    HeatCrop hc;
    hc.heatmap = vision::heatmap_normalize(activations);
    hc.mask = vision::binarize(hc.heatmap, tau);
    hc.region = vision::max_connected_component(hc.mask);
    if (hc.region) {
        const auto grid_box = vision::bbox_of_mask(*hc.region);
        hc.box = vision::scale_box(grid_box, hc.heatmap.height, hc.heatmap.width, img.height(), img.width());
        hc.fallback = false;
    } else {
        hc.box = vision::BoundingBox{0, img.height() - 1, 0, img.width() - 1};
        hc.fallback = true;
    }
    hc.crop = vision::crop_resize(img, hc.box, out_size, out_size);
    return hc;
}

namespace {

void require_input(const MultiStreamModel& m, const vision::GrayImage& img) {
    const int s = m.config().backbone.input_size;
    if (img.height() != s || img.width() != s) {
        throw DimensionError("image is " + std::to_string(img.height()) + "x" + std::to_string(img.width()) +
                             ", model expects " + std::to_string(s) + "x" + std::to_string(s));
    }
}

}  // namespace

GlobalOutput forward_global(const MultiStreamModel& m, const vision::GrayImage& img) {
    require_input(m, img);
    Tape<float> tape;
    ParamBinder<float> binder(tape, false);
    const auto v = branch_forward(binder, m.branch(BranchName::global), tape.constant(img.to_tensor()));
    return GlobalOutput{tape.value(v.activations), tape.value(v.pool), tape.value(v.logits)};
}

BranchOutput forward_heatmap(const MultiStreamModel& m, const vision::GrayImage& img, const Tensor& global_activations) {
    require_input(m, img);
    const auto hc = heat_crop(global_activations, img, m.config().tau, m.config().backbone.input_size);
    Tape<float> tape;
    ParamBinder<float> binder(tape, false);
    const auto v = branch_forward(binder, m.branch(BranchName::heatmap), tape.constant(hc.crop.to_tensor()));
    return BranchOutput{tape.value(v.pool), tape.value(v.logits)};
}

BranchOutput forward_heatmap(const MultiStreamModel& m, const vision::GrayImage& img) {
    return forward_heatmap(m, img, forward_global(m, img).activations);
}

BranchOutput forward_infected_crops(const MultiStreamModel& m, const vision::GrayImage& left,
                                    const vision::GrayImage& right, const Tensor& pool_g) {
    if (pool_g.rank() != 1 || pool_g.dim(0) != m.feature_dim()) {
        throw DimensionError("forward_infected: pool_g has shape " + shape_string(pool_g.shape()) + ", expected [" +
                             std::to_string(m.feature_dim()) + "]");
    }
    Tape<float> tape;
    ParamBinder<float> binder(tape, false);
    const auto v = infected_forward(binder, m.branch(BranchName::infected), tape.constant(left.to_tensor()),
                                    tape.constant(right.to_tensor()), tape.constant(pool_g));
    return BranchOutput{tape.value(v.pool), tape.value(v.logits)};
}

BranchOutput forward_infected(const MultiStreamModel& m, const vision::GrayImage& img,
                              const vision::BinaryMask& seg_mask, const Tensor& pool_g) {
    require_input(m, img);
    const auto split = vision::split_infected_lr(seg_mask, img, m.config().backbone.input_size);
    return forward_infected_crops(m, split.left, split.right, pool_g);
}

Tensor forward_fusion(const MultiStreamModel& m, const Tensor& pool_g, const Tensor& pool_h, const Tensor& pool_in) {
    const int expected = m.branch(BranchName::fusion).head.input_dim();
    const std::size_t got = pool_g.size() + pool_h.size() + pool_in.size();
    if (static_cast<int>(got) != expected) {
        throw ConfigError("fusion head expects " + std::to_string(expected) + " features, got " +
                          std::to_string(pool_g.size()) + "+" + std::to_string(pool_h.size()) + "+" +
                          std::to_string(pool_in.size()));
    }
    Tape<float> tape;
    ParamBinder<float> binder(tape, false);
    const Var logits = fusion_forward(binder, m.branch(BranchName::fusion).head, tape.constant(pool_g),
                                      tape.constant(pool_h), tape.constant(pool_in));
    return tape.value(logits);
}

const Tensor& FullOutput::logits(BranchName b) const {
    switch (b) {
        case BranchName::global: return global.logits;
        case BranchName::heatmap: return heatmap.logits;
        case BranchName::infected: return infected.logits;
        case BranchName::fusion: return fusion_logits;
    }
    throw ValidationError("unknown branch");
}

FullOutput forward_all(const MultiStreamModel& m, const vision::GrayImage& img, const vision::BinaryMask& seg_mask) {
    FullOutput out;
    out.global = forward_global(m, img);
    out.heatmap = forward_heatmap(m, img, out.global.activations);
    out.infected = forward_infected(m, img, seg_mask, out.global.pool);
    std::vector<float> pf(out.global.pool.storage());
    pf.insert(pf.end(), out.heatmap.pool.storage().begin(), out.heatmap.pool.storage().end());
    pf.insert(pf.end(), out.infected.pool.storage().begin(), out.infected.pool.storage().end());
    const int n = static_cast<int>(pf.size());
    out.pool_fusion = Tensor({n}, std::move(pf));
    out.fusion_logits = forward_fusion(m, out.global.pool, out.heatmap.pool, out.infected.pool);
    return out;
}

std::vector<float> cam_raw(const Tensor& activations, int class_idx, const Tensor& head_weight) {
    if (activations.rank() != 3) throw DimensionError("cam: activations must be [K,h,w]");
    if (head_weight.rank() != 2) throw DimensionError("cam: head weight must be [C,K]");
    const int k = activations.dim(0);
    if (head_weight.dim(1) != k) {
        throw DimensionError("cam: head weight has " + std::to_string(head_weight.dim(1)) + " columns for " +
                             std::to_string(k) + " channels");
    }
    if (class_idx < 0 || class_idx >= head_weight.dim(0)) {
        throw RangeError("cam: class index " + std::to_string(class_idx) + " out of range [0," +
                         std::to_string(head_weight.dim(0)) + ")");
    }
    const std::size_t plane = static_cast<std::size_t>(activations.dim(1)) * activations.dim(2);
    std::vector<float> out(plane, 0.0f);
    for (int c = 0; c < k; ++c) {
        const float w = head_weight[static_cast<std::size_t>(class_idx) * k + c];
        for (std::size_t i = 0; i < plane; ++i) out[i] += w * activations[c * plane + i];
    }
    return out;
}

vision::HeatMap cam(const Tensor& activations, int class_idx, const Tensor& head_weight) {
    auto raw = cam_raw(activations, class_idx, head_weight);
    vision::HeatMap h{activations.dim(1), activations.dim(2), std::vector<float>(raw.size(), 0.0f)};
    const auto [mn, mx] = std::minmax_element(raw.begin(), raw.end());
    const float lo = *mn, span = *mx - *mn;
    if (span > 0.0f) {
        for (std::size_t i = 0; i < raw.size(); ++i) h.values[i] = (raw[i] - lo) / span;
    }
    return h;
}

}  // namespace attnfuse::model
