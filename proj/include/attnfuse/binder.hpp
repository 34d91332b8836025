#pragma once

#include <span>
#include <utility>
#include <vector>

#include "attnfuse/autograd.hpp"
#include "attnfuse/optim.hpp"

namespace attnfuse {

/// Binds Parameters onto a tape. Trainable (non-frozen) parameters become
/// gradient leaves when tracking is on; everything else enters as a constant.
/// A parameter bound twice maps to the same leaf, so shared weights sum their
/// gradients.
template <class T>
class ParamBinder {
public:
    explicit ParamBinder(Tape<T>& tape, bool track = true) : tape_(tape), track_(track) {}

    Var bind(const Parameter& p) {
        for (const auto& [ptr, var] : bound_) {
            if (ptr == &p) return var;
        }
        BasicTensor<T> v = p.value.template cast<T>();
        if (track_ && !p.frozen) {
            Var var = tape_.leaf(std::move(v));
            bound_.emplace_back(&p, var);
            return var;
        }
        Var var = tape_.constant(std::move(v));
        bound_.emplace_back(&p, var);
        return var;
    }

    Tape<T>& tape() noexcept { return tape_; }

    /// Adds scale * dLoss/dp into p->grad for every tracked parameter in `params`.
    void accumulate(std::span<Parameter* const> params, float scale) const {
        for (Parameter* p : params) {
            for (const auto& [ptr, var] : bound_) {
                if (ptr != p || !tape_.requires_grad(var)) continue;
                const auto g = tape_.grad(var);
                for (std::size_t i = 0; i < g.size(); ++i) p->grad[i] += scale * static_cast<float>(g[i]);
            }
        }
    }

private:
    Tape<T>& tape_;
    bool track_;
    std::vector<std::pair<const Parameter*, Var>> bound_;
};

}  // namespace attnfuse
