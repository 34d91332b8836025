#include "attnfuse/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <random>

namespace attnfuse::trainer {

using model::Branch;
using model::MultiStreamModel;

void StagePlan::validate() const {
    if (trainable.empty()) throw ConfigError("stage '" + name + "' trains no branch");
    for (std::size_t i = 0; i < trainable.size(); ++i)
        for (std::size_t j = i + 1; j < trainable.size(); ++j)
            if (trainable[i] == trainable[j]) throw ConfigError("stage '" + name + "' lists a branch twice");
    if (epochs < 0) throw ConfigError("stage '" + name + "': epochs must be >= 0");
    if (batch_size < 1) throw ConfigError("stage '" + name + "': batch_size must be >= 1");
}

bool StagePlan::trains(BranchName b) const {
    return std::find(trainable.begin(), trainable.end(), b) != trainable.end();
}

std::vector<BranchName> StagePlan::frozen() const {
    std::vector<BranchName> out;
    for (BranchName b : model::kAllBranches)
        if (!trains(b)) out.push_back(b);
    return out;
}

BranchName StagePlan::monitored() const {
    for (BranchName b : {BranchName::fusion, BranchName::infected, BranchName::heatmap, BranchName::global})
        if (trains(b)) return b;
    throw ConfigError("stage '" + name + "' trains no branch");
}

StagePlan StagePlan::stage_one(int epochs, int batch_size) {
    return {"I", {BranchName::global}, epochs, batch_size};
}
StagePlan StagePlan::stage_two_heatmap(int epochs, int batch_size) {
    return {"II-heatmap", {BranchName::heatmap}, epochs, batch_size};
}
StagePlan StagePlan::stage_two_infected(int epochs, int batch_size) {
    return {"II-infected", {BranchName::infected}, epochs, batch_size};
}
StagePlan StagePlan::stage_three(int epochs, int batch_size) {
    return {"III", {BranchName::fusion}, epochs, batch_size};
}
StagePlan StagePlan::joint(int epochs, int batch_size) {
    return {"joint",
            {BranchName::global, BranchName::heatmap, BranchName::infected, BranchName::fusion},
            epochs,
            batch_size};
}

StagePlan StagePlan::from_name(const std::string& name, int epochs, int batch_size) {
    if (name == "I") return stage_one(epochs, batch_size);
    if (name == "II-heatmap") return stage_two_heatmap(epochs, batch_size);
    if (name == "II-infected") return stage_two_infected(epochs, batch_size);
    if (name == "III") return stage_three(epochs, batch_size);
    if (name == "joint") return joint(epochs, batch_size);
    throw ConfigError("unknown stage '" + name + "'");
}

int select_best(std::span<const EpochRecord> history) {
    if (history.empty()) throw ValidationError("select_best: empty history");
    std::size_t best = 0;
    for (std::size_t i = 1; i < history.size(); ++i)
        if (history[i].val_accuracy > history[best].val_accuracy) best = i;
    return history[best].epoch;
}

bool should_stop(std::span<const EpochRecord> history, const EarlyStopPolicy& policy) {
    if (history.empty()) return false;
    const int best = select_best(history);
    return history.back().epoch - best >= policy.patience;
}

namespace {

// Per-example inputs plus the outputs of whatever is frozen for the stage.
struct Prepared {
    const Example* ex = nullptr;
    Tensor image;
    Tensor left;
    Tensor right;
    Tensor label;
    std::optional<Tensor> pool_g;
    std::optional<Tensor> heat_crop;
    std::optional<Tensor> pool_h;
    std::optional<Tensor> pool_left;
    std::optional<Tensor> pool_right;
};

struct StageLayout {
    bool need_heat = false;
    bool need_infected = false;
    bool global_frozen = false;
    bool heat_cached = false;
    bool lr_cached = false;
};

StageLayout layout_for(const StagePlan& plan) {
    StageLayout l;
    const bool fusion = plan.trains(BranchName::fusion);
    l.need_heat = fusion || plan.trains(BranchName::heatmap);
    l.need_infected = fusion || plan.trains(BranchName::infected);
    l.global_frozen = !plan.trains(BranchName::global);
    l.heat_cached = l.global_frozen && !plan.trains(BranchName::heatmap);
    l.lr_cached = !plan.trains(BranchName::infected);
    return l;
}

Tensor backbone_pool(const Branch& b, const Tensor& img) {
    Tape<float> tape;
    ParamBinder<float> binder(tape, false);
    return tape.value(ops::global_avg_pool(tape, b.backbone.forward(binder, tape.constant(img))));
}

Prepared prepare(const MultiStreamModel& m, const Example& ex, const StageLayout& l) {
    const int s = m.config().backbone.input_size;
    if (ex.image.height() != s || ex.image.width() != s) {
        throw DimensionError("example '" + ex.id + "' is " + std::to_string(ex.image.height()) + "x" +
                             std::to_string(ex.image.width()) + ", model input is " + std::to_string(s));
    }
    Prepared p;
    p.ex = &ex;
    p.image = ex.image.to_tensor();
    p.label = model::label_vector(ex.label, m.num_classes());
    if (l.need_infected) {
        if (ex.seg_mask.height() == 0) {
            throw ValidationError("example '" + ex.id + "' has no segmentation mask for the infected branch");
        }
        const auto split = vision::split_infected_lr(ex.seg_mask, ex.image, s);
        p.left = split.left.to_tensor();
        p.right = split.right.to_tensor();
    }
    if (l.global_frozen) {
        const auto g = model::forward_global(m, ex.image);
        p.pool_g = g.pool;
        if (l.need_heat) p.heat_crop = model::heat_crop(g.activations, ex.image, m.config().tau, s).crop.to_tensor();
    }
    if (l.need_heat && l.heat_cached) p.pool_h = backbone_pool(m.branch(BranchName::heatmap), *p.heat_crop);
    if (l.need_infected && l.lr_cached) {
        p.pool_left = backbone_pool(m.branch(BranchName::infected), p.left);
        p.pool_right = backbone_pool(m.branch(BranchName::infected), p.right);
    }
    return p;
}

struct HeadVars {
    std::optional<Var> logits[4];
};

// Builds whatever the plan needs on the tape and returns the per-branch logits.
HeadVars build(const MultiStreamModel& m, const StagePlan& plan, const StageLayout& l, const Prepared& p,
               ParamBinder<float>& binder) {
    auto& tape = binder.tape();
    HeadVars out;
    const Branch& gb = m.branch(BranchName::global);
    Var pool_g;
    Tensor crop;
    if (l.global_frozen) {
        pool_g = tape.constant(*p.pool_g);
        if (l.need_heat) crop = *p.heat_crop;
    } else {
        const auto v = model::branch_forward(binder, gb, tape.constant(p.image));
        pool_g = v.pool;
        out.logits[0] = v.logits;
        if (l.need_heat) {
            crop = model::heat_crop(tape.value(v.activations), p.ex->image, m.config().tau,
                                    m.config().backbone.input_size)
                       .crop.to_tensor();
        }
    }

    Var pool_h;
    if (l.need_heat) {
        const Branch& hb = m.branch(BranchName::heatmap);
        if (p.pool_h) {
            pool_h = tape.constant(*p.pool_h);
        } else {
            const auto v = model::branch_forward(binder, hb, tape.constant(crop));
            pool_h = v.pool;
        }
        if (plan.trains(BranchName::heatmap)) out.logits[1] = hb.head.forward(binder, pool_h);
    }

    Var pool_in;
    if (l.need_infected) {
        const Branch& ib = m.branch(BranchName::infected);
        if (p.pool_left) {
            pool_in = ops::concat(tape, {tape.constant(*p.pool_left), tape.constant(*p.pool_right), pool_g});
            if (plan.trains(BranchName::infected)) out.logits[2] = ib.head.forward(binder, pool_in);
        } else {
            const auto v = model::infected_forward(binder, ib, tape.constant(p.left), tape.constant(p.right), pool_g);
            pool_in = v.pool;
            out.logits[2] = v.logits;
        }
    }

    if (plan.trains(BranchName::fusion)) {
        out.logits[3] = model::fusion_forward(binder, m.branch(BranchName::fusion).head, pool_g, pool_h, pool_in);
    }
    return out;
}

int slot(BranchName b) { return static_cast<int>(b); }

std::uint64_t stage_seed(std::uint64_t seed, const std::string& name) {
    // FNV-1a over the stage name keeps each stage's stream independent of run order.
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char ch : name) {
        h ^= ch;
        h *= 1099511628211ULL;
    }
    return seed ^ h;
}

}  // namespace

StageResult run_stage(MultiStreamModel& m, const StagePlan& plan, std::span<const Example> train,
                      std::span<const Example> val, const OptimizerConfig& opt, const EarlyStopPolicy& policy,
                      std::uint64_t seed, const EpochCallback& on_epoch) {
    plan.validate();
    opt.validate();
    if (train.empty()) throw ValidationError("run_stage: empty training set");
    if (val.empty()) throw ValidationError("run_stage: empty validation set");
    if (policy.patience < 1) throw ConfigError("early stopping patience must be >= 1");

    m.set_trainable(plan.trainable);
    std::vector<Parameter*> params;
    for (Parameter* p : m.parameters()) {
        if (p->frozen) continue;
        p->reset_momentum();
        params.push_back(p);
    }

    const StageLayout layout = layout_for(plan);
    std::vector<Prepared> tr, va;
    tr.reserve(train.size());
    va.reserve(val.size());
    for (const auto& ex : train) tr.push_back(prepare(m, ex, layout));
    for (const auto& ex : val) va.push_back(prepare(m, ex, layout));

    const BranchName monitored = plan.monitored();
    auto evaluate = [&](float& loss, float& acc) {
        double total = 0.0;
        std::size_t hit = 0;
        for (const auto& p : va) {
            Tape<float> tape;
            ParamBinder<float> binder(tape, false);
            const auto heads = build(m, plan, layout, p, binder);
            const Var probs = ops::sigmoid(tape, *heads.logits[slot(monitored)]);
            total += tape.value(ops::bce_loss(tape, probs, p.label))[0];
            hit += model::predict_label(tape.value(probs)) == p.ex->label;
        }
        loss = static_cast<float>(total / static_cast<double>(va.size()));
        acc = static_cast<float>(hit) / static_cast<float>(va.size());
    };

    StageResult result;
    result.stage = plan.name;
    std::vector<Tensor> best_values;
    auto snapshot = [&] {
        best_values.clear();
        for (Parameter* p : params) best_values.push_back(p->value);
    };
    snapshot();

    std::mt19937_64 rng(stage_seed(seed, plan.name));
    std::vector<std::size_t> order(tr.size());
    std::iota(order.begin(), order.end(), 0);
    float best_acc = -1.0f;
    for (int epoch = 1; epoch <= plan.epochs; ++epoch) {
        const float lr = learning_rate_at(opt, epoch);
        std::shuffle(order.begin(), order.end(), rng);
        double total = 0.0;
        int batch_no = 0;
        for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(plan.batch_size)) {
            ++batch_no;
            const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(plan.batch_size));
            const float scale = 1.0f / static_cast<float>(end - start);
            for (Parameter* p : params) p->zero_grad();
            for (std::size_t i = start; i < end; ++i) {
                const Prepared& p = tr[order[i]];
                Tape<float> tape;
                ParamBinder<float> binder(tape);
                const auto heads = build(m, plan, layout, p, binder);
                std::optional<Var> loss;
                for (BranchName b : plan.trainable) {
                    const Var probs = ops::sigmoid(tape, *heads.logits[slot(b)]);
                    const Var l = ops::bce_loss(tape, probs, p.label);
                    loss = loss ? ops::add(tape, *loss, l) : l;
                }
                const float lv = tape.value(*loss)[0];
                if (!std::isfinite(lv)) {
                    throw NumericalError("stage " + plan.name + ": non-finite loss at epoch " + std::to_string(epoch) +
                                         ", batch " + std::to_string(batch_no) + ", example '" + p.ex->id + "'");
                }
                total += lv;
                tape.backward(*loss);
                binder.accumulate(params, scale);
            }
            sgd_step(params, opt, lr);
        }

        EpochRecord rec;
        rec.epoch = epoch;
        rec.learning_rate = lr;
        rec.train_loss = static_cast<float>(total / static_cast<double>(tr.size()));
        evaluate(rec.val_loss, rec.val_accuracy);
        result.history.push_back(rec);
        if (on_epoch) on_epoch(plan.name, rec);
        if (rec.val_accuracy > best_acc) {
            best_acc = rec.val_accuracy;
            snapshot();
        }
        if (should_stop(result.history, policy)) {
            result.stopped_early = epoch < plan.epochs;
            break;
        }
    }

    if (!result.history.empty()) {
        result.best_epoch = select_best(result.history);
        for (std::size_t i = 0; i < params.size(); ++i) params[i]->value = best_values[i];
    }
    for (Parameter* p : m.parameters()) p->frozen = true;
    return result;
}

std::vector<StagePlan> default_protocol(const ProtocolConfig& cfg) {
    std::vector<StagePlan> plans{StagePlan::stage_one(cfg.epochs, cfg.batch_size)};
    auto heat = StagePlan::stage_two_heatmap(cfg.epochs, cfg.batch_size);
    auto inf = StagePlan::stage_two_infected(cfg.epochs, cfg.batch_size);
    if (cfg.infected_first) {
        plans.push_back(inf);
        plans.push_back(heat);
    } else {
        plans.push_back(heat);
        plans.push_back(inf);
    }
    plans.push_back(StagePlan::stage_three(cfg.epochs, cfg.batch_size));
    return plans;
}

std::vector<StageResult> run_protocol(MultiStreamModel& m, std::span<const Example> train,
                                      std::span<const Example> val, const ProtocolConfig& cfg,
                                      const EpochCallback& on_epoch) {
    std::vector<StageResult> out;
    for (const auto& plan : default_protocol(cfg)) {
        out.push_back(run_stage(m, plan, train, val, cfg.optimizer, cfg.early_stop, cfg.seed, on_epoch));
    }
    return out;
}

model::FullOutput infer(const MultiStreamModel& m, const Example& ex) {
    return model::forward_all(m, ex.image, ex.seg_mask);
}

}  // namespace attnfuse::trainer
