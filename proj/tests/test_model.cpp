#include <gtest/gtest.h>

#include <random>

#include "attnfuse/model.hpp"

using namespace attnfuse;
using namespace attnfuse::model;

namespace {

ModelConfig small_config(int k = 8, std::uint64_t seed = 3) {
    ModelConfig cfg;
    cfg.backbone.stage_channels = {4, 8};
    cfg.backbone.final_channels = k;
    cfg.backbone.input_size = 32;
    cfg.seed = seed;
    return cfg;
}

vision::GrayImage noise_image(int size, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<float> u(0.0f, 1.0f);
    vision::GrayImage img(size, size);
    for (int r = 0; r < size; ++r)
        for (int c = 0; c < size; ++c) img.at(r, c) = u(rng);
    return img;
}

}  // namespace

TEST(Model, GlobalShapesAndRange) {
    const MultiStreamModel m(small_config());
    const auto g = forward_global(m, noise_image(32, 1));
    EXPECT_EQ(g.activations.shape(), (Shape{8, 8, 8}));
    EXPECT_EQ(g.pool.shape(), (Shape{8}));
    EXPECT_EQ(g.logits.shape(), (Shape{2}));
    for (float v : g.activations.data()) EXPECT_GE(v, 0.0f);
}

TEST(Model, WrongInputSizeThrows) {
    const MultiStreamModel m(small_config());
    EXPECT_THROW(forward_global(m, noise_image(16, 1)), DimensionError);
}

TEST(Model, PoolDimensionsAddUp) {
    const MultiStreamModel m(small_config(8));
    const auto img = noise_image(32, 2);
    vision::BinaryMask seg(32, 32);
    seg.set(5, 5, true);
    seg.set(20, 25, true);
    const auto out = forward_all(m, img, seg);
    EXPECT_EQ(out.infected.pool.size(), 24u);
    EXPECT_EQ(out.pool_fusion.size(), 40u);
    EXPECT_EQ(m.branch(BranchName::fusion).head.input_dim(), 40);
    for (auto b : kAllBranches) {
        const Tensor p = sigmoid_normalize(out.logits(b));
        for (float v : p.data()) {
            EXPECT_GT(v, 0.0f);
            EXPECT_LT(v, 1.0f);
        }
    }
}

TEST(Model, EmptySegMaskStillWellFormed) {
    const MultiStreamModel m(small_config());
    const auto g = forward_global(m, noise_image(32, 3));
    const auto in = forward_infected(m, noise_image(32, 3), vision::BinaryMask(32, 32), g.pool);
    EXPECT_EQ(in.pool.size(), 24u);
    EXPECT_EQ(in.logits.size(), 2u);
}

TEST(Model, PoolInEndsWithPoolGlobal) {
    const MultiStreamModel m(small_config());
    const auto img = noise_image(32, 4);
    const auto g = forward_global(m, img);
    const auto in = forward_infected(m, img, vision::BinaryMask(32, 32), g.pool);
    for (int i = 0; i < 8; ++i) EXPECT_EQ(in.pool[16 + i], g.pool[i]);
}

TEST(Model, SwappingCropsSwapsPools) {
    const MultiStreamModel m(small_config());
    const auto a = noise_image(32, 5), b = noise_image(32, 6);
    const Tensor pg({8}, 0.5f);
    const auto ab = forward_infected_crops(m, a, b, pg);
    const auto ba = forward_infected_crops(m, b, a, pg);
    for (int i = 0; i < 8; ++i) {
        EXPECT_EQ(ab.pool[i], ba.pool[8 + i]);
        EXPECT_EQ(ab.pool[8 + i], ba.pool[i]);
    }
}

TEST(Model, ZeroFusionWeightsGiveBias) {
    MultiStreamModel m(small_config());
    auto& head = m.branch(BranchName::fusion).head;
    head.weight.value.fill(0.0f);
    head.bias.value = Tensor({2}, std::vector<float>{0.25f, -1.5f});
    const Tensor pg({8}, 1.0f), ph({8}, 2.0f), pin({24}, 3.0f);
    EXPECT_EQ(forward_fusion(m, pg, ph, pin), head.bias.value);
}

TEST(Model, FusionDimensionMismatchIsConfigError) {
    const MultiStreamModel m(small_config());
    EXPECT_THROW(forward_fusion(m, Tensor({8}), Tensor({8}), Tensor({16})), ConfigError);
}

TEST(Model, DeterministicForSeed) {
    const MultiStreamModel a(small_config(8, 9)), b(small_config(8, 9));
    const auto img = noise_image(32, 7);
    EXPECT_EQ(forward_global(a, img).logits, forward_global(b, img).logits);
    const MultiStreamModel c(small_config(8, 10));
    EXPECT_NE(forward_global(a, img).logits, forward_global(c, img).logits);
}

TEST(Model, GlobalIgnoresOtherBranches) {
    MultiStreamModel m(small_config());
    const auto img = noise_image(32, 8);
    const Tensor before = forward_global(m, img).logits;
    for (auto* p : m.parameters_of(BranchName::heatmap)) p->value.fill(0.3f);
    for (auto* p : m.parameters_of(BranchName::infected)) p->value.fill(-0.2f);
    EXPECT_EQ(forward_global(m, img).logits, before);
}

TEST(Model, SetTrainableFreezesOthers) {
    MultiStreamModel m(small_config());
    const std::array<BranchName, 1> only{BranchName::heatmap};
    m.set_trainable(only);
    for (auto b : kAllBranches) {
        for (auto* p : m.parameters_of(b)) EXPECT_EQ(p->frozen, b != BranchName::heatmap) << p->name;
    }
}

TEST(HeatCrop, HotCornerCropsThatCorner) {
    Tensor act({2, 4, 4}, 0.0f);
    act.at(0, 0, 0) = 5.0f;
    act.at(1, 0, 0) = 1.0f;
    vision::GrayImage img(32, 32, 0.0f);
    for (int r = 0; r < 8; ++r)
        for (int c = 0; c < 8; ++c) img.at(r, c) = 1.0f;
    const auto hc = heat_crop(act, img, 0.75f, 16);
    EXPECT_FALSE(hc.fallback);
    EXPECT_EQ(hc.box, (vision::BoundingBox{0, 7, 0, 7}));
    for (float v : hc.crop.pixels()) EXPECT_FLOAT_EQ(v, 1.0f);
}

TEST(HeatCrop, UniformActivationsFallBack) {
    const Tensor act({3, 4, 4}, 2.0f);
    const auto img = noise_image(32, 9);
    const auto hc = heat_crop(act, img, 0.75f, 32);
    EXPECT_TRUE(hc.fallback);
    EXPECT_EQ(hc.box, (vision::BoundingBox{0, 31, 0, 31}));
    EXPECT_EQ(hc.crop, img);
}

TEST(Cam, RawDotProduct) {
    Tensor act({2, 1, 1}, std::vector<float>{2, 3});
    EXPECT_EQ(cam_raw(act, 0, Tensor({1, 2}, std::vector<float>{1.0f, 0.5f})), std::vector<float>{3.5f});
    EXPECT_EQ(cam_raw(act, 0, Tensor({1, 2}, std::vector<float>{0.5f, 1.0f})), std::vector<float>{4.0f});
}

TEST(Cam, ZeroWeightsGiveZeroMap) {
    const Tensor act({2, 3, 3}, 1.0f);
    const auto h = cam(act, 1, Tensor({2, 2}, 0.0f));
    for (float v : h.values) EXPECT_EQ(v, 0.0f);
}

TEST(Cam, NormalizedMapIgnoresWeightScale) {
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<float> u(0.0f, 1.0f);
    Tensor act({3, 4, 4});
    for (auto& v : act.data()) v = u(rng);
    Tensor w({2, 3}, std::vector<float>{0.1f, -0.4f, 0.7f, 0.2f, 0.3f, -0.5f});
    Tensor w2 = w;
    for (auto& v : w2.data()) v *= 2.0f;
    const auto a = cam(act, 0, w), b = cam(act, 0, w2);
    for (std::size_t i = 0; i < a.values.size(); ++i) EXPECT_NEAR(a.values[i], b.values[i], 1e-6f);
}

TEST(Cam, ClassOutOfRange) {
    EXPECT_THROW(cam(Tensor({2, 2, 2}, 1.0f), 2, Tensor({2, 2}, 1.0f)), RangeError);
}

TEST(Labels, VectorsAndPrediction) {
    EXPECT_EQ(label_vector(1, 2), Tensor({2}, std::vector<float>{0, 1}));
    EXPECT_EQ(label_vector(0, 1), Tensor({1}, 0.0f));
    EXPECT_EQ(predict_label(Tensor({2}, std::vector<float>{0.4f, 0.6f})), 1);
    EXPECT_EQ(predict_label(Tensor({2}, std::vector<float>{0.5f, 0.5f})), 0);
    EXPECT_THROW(label_vector(2, 2), ValidationError);
}

TEST(ModelConfig, RejectsIndivisibleInput) {
    auto cfg = small_config();
    cfg.backbone.input_size = 30;
    EXPECT_THROW(MultiStreamModel{cfg}, ConfigError);
}
