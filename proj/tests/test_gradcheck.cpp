#include <gtest/gtest.h>

#include "support/grad_suite.hpp"

using namespace attnfuse;
using gradsuite::DTensor;

TEST(GradCheck, LinearOpIsExact) {
    std::mt19937_64 rng(5);
    const auto w = gradsuite::random_tensor({4, 6}, rng);
    const auto b = gradsuite::random_tensor({4}, rng);
    const auto x = gradsuite::random_tensor({6}, rng);
    const auto rep = grad_check<double>(
        [&](Tape<double>& t, Var v) { return ops::fully_connected(t, v, t.constant(w), t.constant(b)); }, x, 1e-3,
        1e-6);
    EXPECT_TRUE(rep.passed) << rep.max_rel_error;
    EXPECT_LT(rep.max_rel_error, 1e-6);
}

TEST(GradCheck, ConvOnTwoByFourByFour) {
    std::mt19937_64 rng(6);
    const auto w = gradsuite::random_tensor({2, 2, 3, 3}, rng);
    const auto b = gradsuite::random_tensor({2}, rng);
    const auto x = gradsuite::random_tensor({2, 4, 4}, rng);
    const auto rep = grad_check<double>(
        [&](Tape<double>& t, Var v) { return ops::conv2d(t, v, t.constant(w), t.constant(b), 1, 1); }, x, 1e-3, 1e-4);
    EXPECT_TRUE(rep.passed) << rep.max_rel_error;
}

TEST(GradCheck, DetectsAWrongGradient) {
    // sigmoid's value with relu's gradient: the check must fail.
    const DTensor x({3}, std::vector<double>{0.3, -0.2, 0.9});
    const auto rep = grad_check<double>(
        [](Tape<double>& t, Var v) {
            auto s = t.value(ops::sigmoid(t, v));
            Var r = ops::relu(t, v);
            return t.emplace(s, t.requires_grad(r), [r](Tape<double>& tt, std::size_t self) {
                auto& g = tt.grad_mut(r.id);
                const auto& gs = tt.grad_of(self);
                for (std::size_t i = 0; i < gs.size(); ++i) g[i] += gs[i];
            });
        },
        x, 1e-4, 1e-4);
    EXPECT_FALSE(rep.passed);
}

TEST(GradCheck, RejectsNonPositiveStep) {
    const DTensor x({1}, 1.0);
    EXPECT_THROW(grad_check<double>([](Tape<double>& t, Var v) { return ops::relu(t, v); }, x, 0.0, 1e-4),
                 ValidationError);
}

TEST(GradSuite, EveryOpWithinTolerance) {
    for (const auto& c : gradsuite::op_suite(5)) {
        EXPECT_TRUE(c.passed) << c.name << " max rel error " << c.max_rel_error;
    }
}

TEST(GradSuite, CompositeWithinTolerance) {
    for (const auto& c : gradsuite::composite_suite(3)) {
        EXPECT_TRUE(c.passed) << c.name << " max rel error " << c.max_rel_error;
    }
}
