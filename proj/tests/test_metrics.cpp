#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "attnfuse/errors.hpp"
#include "attnfuse/metrics.hpp"

using namespace attnfuse;
using namespace attnfuse::evalviz;

namespace {

// Pair-counting AUC: concordant pairs plus half the ties.
double mann_whitney(const std::vector<double>& s, const std::vector<int>& y) {
    double hits = 0.0;
    std::size_t pairs = 0;
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (y[i] != 1) continue;
        for (std::size_t j = 0; j < s.size(); ++j) {
            if (y[j] != 0) continue;
            ++pairs;
            hits += s[i] > s[j] ? 1.0 : (s[i] == s[j] ? 0.5 : 0.0);
        }
    }
    return hits / static_cast<double>(pairs);
}

}  // namespace

TEST(Classification, CountsExample) {
    // TP=2, FP=1, FN=1, TN=6
    const std::vector<int> pred{1, 1, 1, 0, 0, 0, 0, 0, 0, 0};
    const std::vector<int> label{1, 1, 0, 1, 0, 0, 0, 0, 0, 0};
    const auto m = classification_metrics(pred, label);
    EXPECT_EQ(m.confusion.tp, 2u);
    EXPECT_EQ(m.confusion.fp, 1u);
    EXPECT_EQ(m.confusion.fn, 1u);
    EXPECT_EQ(m.confusion.tn, 6u);
    EXPECT_NEAR(m.precision, 2.0 / 3.0, 1e-15);
    EXPECT_NEAR(m.recall, 2.0 / 3.0, 1e-15);
    EXPECT_NEAR(m.f1, 2.0 / 3.0, 1e-15);
    EXPECT_NEAR(m.accuracy, 0.8, 1e-15);
}

TEST(Classification, PerfectAndDegenerate) {
    const std::vector<int> y{0, 1, 1, 0};
    const auto perfect = classification_metrics(y, y);
    EXPECT_EQ(perfect.accuracy, 1.0);
    EXPECT_EQ(perfect.f1, 1.0);

    const std::vector<int> zeros{0, 0, 0};
    const auto none = classification_metrics(zeros, zeros);
    EXPECT_EQ(none.f1, 0.0);
    EXPECT_EQ(none.accuracy, 1.0);
}

TEST(Classification, LengthMismatch) {
    const std::vector<int> a{0, 1}, b{0};
    EXPECT_THROW(classification_metrics(a, b), ValidationError);
}

TEST(Classification, ScoresThresholdStrictly) {
    const std::vector<double> s{0.5, 0.51, 0.2};
    const std::vector<int> y{0, 1, 0};
    EXPECT_EQ(classification_metrics(s, y, 0.5).accuracy, 1.0);
}

TEST(Auc, WorkedExample) {
    const std::vector<double> s{0.1, 0.4, 0.35, 0.8};
    const std::vector<int> y{0, 0, 1, 1};
    EXPECT_EQ(auc(s, y), 0.75);
}

TEST(Auc, SeparatedAndTied) {
    const std::vector<int> y{0, 1, 0, 1};
    EXPECT_EQ(auc(std::vector<double>{0.1, 0.9, 0.2, 0.8}, y), 1.0);
    EXPECT_EQ(auc(std::vector<double>{0.3, 0.3, 0.3, 0.3}, y), 0.5);
}

TEST(Auc, SingleClassThrows) {
    const std::vector<double> s{0.1, 0.2};
    const std::vector<int> y{1, 1};
    EXPECT_THROW(auc(s, y), ValidationError);
}

TEST(Auc, MatchesPairCountingOracle) {
    std::mt19937_64 rng(17);
    for (int trial = 0; trial < 50; ++trial) {
        const int n = 2 + static_cast<int>(rng() % 40);
        std::vector<double> s(n);
        std::vector<int> y(n);
        for (int i = 0; i < n; ++i) {
            s[i] = static_cast<double>(rng() % 10) / 10.0;  // coarse grid forces ties
            y[i] = static_cast<int>(rng() % 2);
        }
        y[0] = 0;
        y[1] = 1;
        EXPECT_NEAR(auc(s, y), mann_whitney(s, y), 1e-12) << "trial " << trial;
    }
}

TEST(Auc, InvariantUnderMonotoneTransform) {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<double> s(30), t(30);
    std::vector<int> y(30);
    for (int i = 0; i < 30; ++i) {
        s[i] = u(rng);
        t[i] = std::exp(3.0 * s[i]) - 1.0;
        y[i] = i % 3 == 0;
    }
    EXPECT_EQ(auc(s, y), auc(t, y));
}

TEST(Evaluate, NullAucForOneClass) {
    const auto r = evaluate({0.2, 0.7}, {0, 1}, {0, 0});
    EXPECT_FALSE(r.auc.has_value());
    EXPECT_EQ(r.metrics.accuracy, 0.5);
}
