#include <gtest/gtest.h>

#include <random>

#include "attnfuse/vision.hpp"

using namespace attnfuse;
using namespace attnfuse::vision;

namespace {

BinaryMask mask_from(const std::vector<std::vector<int>>& rows) {
    BinaryMask m(static_cast<int>(rows.size()), static_cast<int>(rows[0].size()));
    for (int r = 0; r < m.height(); ++r)
        for (int c = 0; c < m.width(); ++c) m.set(r, c, rows[r][c] != 0);
    return m;
}

Tensor channel(std::vector<float> v, int h, int w) { return Tensor({1, h, w}, std::move(v)); }

}  // namespace

TEST(GrayImage, ClampsOnConstruction) {
    GrayImage img(1, 3, std::vector<float>{-1.0f, 0.5f, 2.0f});
    EXPECT_EQ(img.at(0, 0), 0.0f);
    EXPECT_EQ(img.at(0, 1), 0.5f);
    EXPECT_EQ(img.at(0, 2), 1.0f);
    EXPECT_THROW(GrayImage(2, 2, std::vector<float>{0, 0, 0}), DimensionError);
}

TEST(Heatmap, WorkedExample) {
    const auto h = heatmap_normalize(channel({0, 2, 4, 8}, 2, 2));
    EXPECT_EQ(h.values, (std::vector<float>{0.0f, 0.25f, 0.5f, 1.0f}));
}

TEST(Heatmap, SumsChannels) {
    const Tensor a({2, 1, 2}, std::vector<float>{0, 1, 0, 3});
    EXPECT_EQ(heatmap_normalize(a).values, (std::vector<float>{0.0f, 1.0f}));
}

TEST(Heatmap, ConstantMapIsZero) {
    EXPECT_EQ(heatmap_normalize(channel({3, 3, 3, 3}, 2, 2)).values, std::vector<float>(4, 0.0f));
    EXPECT_EQ(heatmap_normalize(channel({0, 0, 0, 0}, 2, 2)).values, std::vector<float>(4, 0.0f));
}

TEST(Heatmap, ScaleInvariant) {
    const auto a = heatmap_normalize(channel({0, 2, 4, 8}, 2, 2));
    const auto b = heatmap_normalize(channel({0, 4, 8, 16}, 2, 2));
    EXPECT_EQ(a.values, b.values);
}

TEST(Heatmap, RejectsNegativeActivations) {
    EXPECT_THROW(heatmap_normalize(channel({0, -1, 2, 3}, 2, 2)), ValidationError);
}

TEST(Binarize, WorkedExample) {
    const auto h = heatmap_normalize(channel({0, 2, 4, 8}, 2, 2));
    EXPECT_EQ(binarize(h, 0.75f), mask_from({{0, 0}, {0, 1}}));
    EXPECT_TRUE(binarize(h, 1.0f).empty());
    EXPECT_THROW(binarize(h, 1.5f), RangeError);
}

TEST(ConnectedComponent, WorkedExample) {
    const auto m = mask_from({{1, 1, 1}, {0, 0, 1}, {1, 0, 0}});
    EXPECT_EQ(max_connected_component(m), mask_from({{1, 1, 1}, {0, 0, 1}, {0, 0, 0}}));
}

TEST(ConnectedComponent, SingleCellAndEmpty) {
    const auto one = mask_from({{0, 0}, {0, 1}});
    EXPECT_EQ(max_connected_component(one), one);
    EXPECT_FALSE(max_connected_component(BinaryMask(3, 3)).has_value());
}

TEST(ConnectedComponent, DiagonalCellsConnect) {
    const auto m = mask_from({{1, 0, 0}, {0, 1, 0}, {0, 0, 1}});
    EXPECT_EQ(max_connected_component(m), m);
}

TEST(ConnectedComponent, TieKeepsEarliestComponent) {
    const auto m = mask_from({{0, 0, 1}, {0, 0, 0}, {1, 0, 0}});
    EXPECT_EQ(max_connected_component(m), mask_from({{0, 0, 1}, {0, 0, 0}, {0, 0, 0}}));
}

TEST(BoundingBox, Examples) {
    auto m = BinaryMask(4, 5);
    m.set(1, 1, true);
    m.set(2, 3, true);
    EXPECT_EQ(bbox_of_mask(m), (BoundingBox{1, 2, 1, 3}));
    EXPECT_EQ(bbox_of_mask(mask_from({{0, 0}, {1, 0}})), (BoundingBox{1, 1, 0, 0}));
    EXPECT_EQ(bbox_of_mask(mask_from({{1, 1}, {1, 1}})), (BoundingBox{0, 1, 0, 1}));
    EXPECT_THROW(bbox_of_mask(BinaryMask(2, 2)), EmptyRegionError);
}

TEST(ScaleBox, CoversSourceCells) {
    EXPECT_EQ(scale_box({1, 1, 0, 0}, 4, 4, 64, 64), (BoundingBox{16, 31, 0, 15}));
    EXPECT_EQ(scale_box({0, 2, 0, 2}, 3, 3, 10, 10), (BoundingBox{0, 9, 0, 9}));
    EXPECT_THROW(scale_box({0, 4, 0, 0}, 4, 4, 8, 8), RangeError);
}

TEST(CropResize, Examples) {
    const GrayImage img(2, 2, std::vector<float>{0.0f, 0.2f, 0.4f, 0.6f});
    EXPECT_NEAR(resize_bilinear(img, 1, 1).at(0, 0), 0.3f, 1e-7f);
    EXPECT_EQ(crop_resize(img, {0, 1, 0, 1}, 2, 2), img);
    const GrayImage flat(5, 7, 0.25f);
    const auto big = resize_bilinear(flat, 9, 3);
    for (float v : big.pixels()) EXPECT_EQ(v, 0.25f);
    EXPECT_THROW(crop_resize(img, {0, 2, 0, 1}, 2, 2), RangeError);
}

TEST(CropResize, TwoByTwoMeanScaled) {
    // [[0,2],[4,6]] scaled by 1/8 into [0,1]: the center sample is the mean 3/8.
    const GrayImage img(2, 2, std::vector<float>{0.0f, 0.25f, 0.5f, 0.75f});
    EXPECT_FLOAT_EQ(resize_bilinear(img, 1, 1).at(0, 0) * 8.0f, 3.0f);
}

TEST(SplitInfected, OneBlobPerHalf) {
    GrayImage img(8, 8, 0.5f);
    BinaryMask m(8, 8);
    m.set(2, 1, true);
    m.set(3, 2, true);
    m.set(5, 6, true);
    const auto s = split_infected_lr(m, img, 4);
    EXPECT_FALSE(s.left_fallback);
    EXPECT_FALSE(s.right_fallback);
    EXPECT_EQ(s.left_box, (BoundingBox{2, 3, 1, 2}));
    EXPECT_EQ(s.right_box, (BoundingBox{5, 5, 6, 6}));
    EXPECT_EQ(s.left.height(), 4);
    EXPECT_EQ(s.right.width(), 4);
}

TEST(SplitInfected, EmptyMaskFallsBackToHalves) {
    GrayImage img(8, 8, 0.5f);
    const auto s = split_infected_lr(BinaryMask(8, 8), img, 4);
    EXPECT_TRUE(s.left_fallback);
    EXPECT_TRUE(s.right_fallback);
    EXPECT_EQ(s.left_box, (BoundingBox{0, 7, 0, 3}));
    EXPECT_EQ(s.right_box, (BoundingBox{0, 7, 4, 7}));
}

TEST(SplitInfected, LeftOnly) {
    GrayImage img(8, 8, 0.5f);
    BinaryMask m(8, 8);
    m.set(4, 0, true);
    const auto s = split_infected_lr(m, img, 6);
    EXPECT_FALSE(s.left_fallback);
    EXPECT_TRUE(s.right_fallback);
    EXPECT_EQ(s.left_box, (BoundingBox{4, 4, 0, 0}));
    EXPECT_EQ(s.left.height(), 6);
    EXPECT_EQ(s.right.width(), 6);
}

TEST(HeatmapProperties, RangeScaleAndTauMonotone) {
    std::mt19937_64 rng(21);
    std::uniform_real_distribution<float> u(0.0f, 3.0f);
    for (int trial = 0; trial < 50; ++trial) {
        Tensor a({3, 5, 6});
        for (auto& v : a.data()) v = u(rng);
        const auto h = heatmap_normalize(a);
        for (float v : h.values) {
            EXPECT_GE(v, 0.0f);
            EXPECT_LE(v, 1.0f);
        }
        Tensor scaled = a;
        for (auto& v : scaled.data()) v *= 4.0f;
        EXPECT_EQ(heatmap_normalize(scaled).values, h.values);
        EXPECT_TRUE(binarize(h, 0.8f).subset_of(binarize(h, 0.3f)));
    }
}
