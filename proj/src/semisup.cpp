#include "attnfuse/semisup.hpp"

#include <algorithm>
#include <numeric>
#include <unordered_set>

namespace attnfuse::semisup {

std::string to_string(Provenance p) { return p == Provenance::seed ? "seed" : "pseudo"; }

void PseudoLabelPool::check_partition() const {
    std::unordered_set<std::string> seen;
    for (const auto& m : train_set) {
        if (!seen.insert(m.id).second) throw ValidationError("pool: duplicate id '" + m.id + "'");
    }
    for (const auto& u : test_set) {
        if (!seen.insert(u.id).second) throw ValidationError("pool: id '" + u.id + "' in both sets");
    }
}

namespace {

Tensor mask_tensor(const vision::BinaryMask& m) {
    Tensor t({1, m.height(), m.width()});
    for (std::size_t i = 0; i < m.bits().size(); ++i) t[i] = m.bits()[i] ? 1.0f : 0.0f;
    return t;
}

void require_size(const Segmenter& seg, const MaskedImage& s) {
    const int n = seg.config().input_size;
    if (s.image.height() != n || s.image.width() != n || s.mask.height() != n || s.mask.width() != n) {
        throw DimensionError("segmenter training sample '" + s.id + "' is not " + std::to_string(n) + "x" +
                             std::to_string(n));
    }
}

}  // namespace

std::vector<float> train_segmenter(Segmenter& seg, std::span<const MaskedImage> train_set, int epochs,
                                   std::uint64_t seed) {
    if (train_set.empty()) throw ValidationError("train_segmenter: empty training set");
    if (epochs < 0) throw ValidationError("train_segmenter: negative epoch count");
    for (const auto& s : train_set) require_size(seg, s);
    const auto& cfg = seg.config();
    OptimizerConfig opt;
    opt.learning_rate = cfg.learning_rate;
    opt.momentum = cfg.momentum;
    opt.weight_decay = cfg.weight_decay;
    auto params = seg.parameters();
    for (Parameter* p : params) {
        p->frozen = false;
        p->reset_momentum();
    }

    std::vector<std::size_t> order(train_set.size());
    std::iota(order.begin(), order.end(), 0);
    std::mt19937_64 rng(seed);
    std::vector<float> losses;
    for (int epoch = 0; epoch < epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        double total = 0.0;
        for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(cfg.batch_size)) {
            const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(cfg.batch_size));
            const float scale = 1.0f / static_cast<float>(end - start);
            for (Parameter* p : params) p->zero_grad();
            for (std::size_t i = start; i < end; ++i) {
                const auto& s = train_set[order[i]];
                Tape<float> tape;
                ParamBinder<float> binder(tape);
                const Var probs = seg.forward(binder, tape.constant(s.image.to_tensor()));
                const Var loss = ops::bce_loss(tape, probs, mask_tensor(s.mask), seg.config().positive_weight);
                total += tape.value(loss)[0];
                tape.backward(loss);
                binder.accumulate(params, scale);
            }
            sgd_step(params, opt, opt.learning_rate);
        }
        losses.push_back(static_cast<float>(total / static_cast<double>(order.size())));
    }
    return losses;
}

float segmenter_loss(const Segmenter& seg, std::span<const MaskedImage> set) {
    if (set.empty()) return 0.0f;
    double total = 0.0;
    for (const auto& s : set) {
        require_size(seg, s);
        Tape<float> tape;
        ParamBinder<float> binder(tape, false);
        const Var probs = seg.forward(binder, tape.constant(s.image.to_tensor()));
        total += tape.value(ops::bce_loss(tape, probs, mask_tensor(s.mask), seg.config().positive_weight))[0];
    }
    return static_cast<float>(total / static_cast<double>(set.size()));
}

float pixel_accuracy(const Segmenter& seg, std::span<const MaskedImage> set) {
    std::size_t hit = 0, total = 0;
    for (const auto& s : set) {
        const auto pred = seg.predict_mask(s.image);
        for (std::size_t i = 0; i < pred.bits().size(); ++i) hit += pred.bits()[i] == s.mask.bits()[i];
        total += pred.bits().size();
    }
    return total ? static_cast<float>(hit) / static_cast<float>(total) : 0.0f;
}

std::vector<std::string> pseudo_label_round(const Segmenter& seg, PseudoLabelPool& pool, std::mt19937_64& rng) {
    if (pool.k < 1) throw ValidationError("pseudo_label_round: k must be >= 1");
    const std::size_t take = std::min(static_cast<std::size_t>(pool.k), pool.test_set.size());
    if (take == 0) return {};
    std::vector<std::size_t> idx(pool.test_set.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::shuffle(idx.begin(), idx.end(), rng);
    idx.resize(take);
    std::sort(idx.begin(), idx.end());

    std::vector<MaskedImage> labeled;
    labeled.reserve(take);
    for (std::size_t i : idx) {
        const auto& u = pool.test_set[i];
        labeled.push_back(MaskedImage{u.id, u.image, seg.predict_mask(u.image), Provenance::pseudo});
    }

    // Single commit: remove the sampled images, then append their labels.
    std::vector<UnlabeledImage> remaining;
    remaining.reserve(pool.test_set.size() - take);
    std::size_t next = 0;
    for (std::size_t i = 0; i < pool.test_set.size(); ++i) {
        if (next < idx.size() && idx[next] == i) {
            ++next;
            continue;
        }
        remaining.push_back(std::move(pool.test_set[i]));
    }
    pool.test_set = std::move(remaining);
    std::vector<std::string> ids;
    for (auto& m : labeled) {
        ids.push_back(m.id);
        pool.train_set.push_back(std::move(m));
    }
    return ids;
}

Algorithm1Report run_algorithm1(Segmenter& seg, PseudoLabelPool& pool, int epochs_per_round, std::uint64_t seed,
                                const RoundObserver& observer) {
    if (pool.train_set.empty()) throw ValidationError("run_algorithm1: no mask-labeled seed images");
    pool.check_partition();
    std::mt19937_64 rng(seed);
    Algorithm1Report rep;
    while (!pool.test_set.empty()) {
        const std::uint64_t round_seed = seed + 0x9E3779B97F4A7C15ULL * static_cast<std::uint64_t>(rep.rounds + 1);
        train_segmenter(seg, pool.train_set, epochs_per_round, round_seed);
        const auto ids = pseudo_label_round(seg, pool, rng);
        ++rep.rounds;
        rep.round_sizes.push_back(ids.size());
        if (observer) observer(pool, rep.rounds);
    }
    rep.final_epoch_losses = train_segmenter(seg, pool.train_set, epochs_per_round, seed ^ 0xF1A1ULL);
    return rep;
}

}  // namespace attnfuse::semisup
