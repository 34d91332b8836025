#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>

#include "attnfuse/ops.hpp"

namespace attnfuse {

struct GradCheckReport {
    double max_rel_error = 0.0;
    double max_abs_error = 0.0;
    std::size_t worst_index = 0;
    bool passed = false;
};

/// Compares the reverse-mode gradient of `op` at `input` against central
/// finite differences. `op(tape, x)` may return any shape; non-scalar outputs
/// are projected onto fixed random weights to form a scalar objective.
///
/// Relative error per coordinate is |a - n| / max(|a|, |n|, floor); the floor
/// keeps coordinates whose true gradient is zero from dividing by zero.
template <class T, class Op>
GradCheckReport grad_check(Op&& op, const BasicTensor<T>& input, double step, double tol,
                           std::uint64_t projection_seed = 1234, double floor = 1e-8) {
    if (!(step > 0.0)) throw ValidationError("grad_check: step must be > 0");

    BasicTensor<T> projection;
    auto objective = [&](Tape<T>& tape, Var x) {
        Var out = op(tape, x);
        if (tape.value(out).size() == 1) return out;
        if (projection.empty()) {
            std::mt19937_64 rng(projection_seed);
            std::uniform_real_distribution<double> u(-1.0, 1.0);
            projection = BasicTensor<T>(tape.value(out).shape());
            for (auto& v : projection.data()) v = static_cast<T>(u(rng));
        }
        return ops::weighted_sum(tape, out, projection);
    };

    Tape<T> tape;
    Var x = tape.leaf(input);
    Var f = objective(tape, x);
    tape.backward(f);
    const BasicTensor<T> analytic = tape.grad(x);

    GradCheckReport rep;
    BasicTensor<T> probe = input;
    for (std::size_t i = 0; i < input.size(); ++i) {
        const T orig = probe[i];
        probe[i] = static_cast<T>(orig + step);
        Tape<T> tp;
        const double fp = static_cast<double>(tp.value(objective(tp, tp.constant(probe)))[0]);
        probe[i] = static_cast<T>(orig - step);
        Tape<T> tm;
        const double fm = static_cast<double>(tm.value(objective(tm, tm.constant(probe)))[0]);
        probe[i] = orig;

        const double numeric = (fp - fm) / (2.0 * step);
        const double a = static_cast<double>(analytic[i]);
        const double abs_err = std::abs(a - numeric);
        const double rel = abs_err / std::max({std::abs(a), std::abs(numeric), floor});
        rep.max_abs_error = std::max(rep.max_abs_error, abs_err);
        if (rel > rep.max_rel_error) {
            rep.max_rel_error = rel;
            rep.worst_index = i;
        }
    }
    rep.passed = rep.max_rel_error < tol;
    return rep;
}

}  // namespace attnfuse
