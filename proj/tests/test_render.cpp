#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <iterator>

#include "attnfuse/render.hpp"

using namespace attnfuse;
using namespace attnfuse::evalviz;

namespace {

vision::GrayImage ramp(int size) {
    vision::GrayImage img(size, size);
    for (int r = 0; r < size; ++r)
        for (int c = 0; c < size; ++c) img.at(r, c) = static_cast<float>(r * size + c) / (size * size);
    return img;
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), {}};
}

}  // namespace

TEST(Overlay, ZeroCamIsGrayscale) {
    const auto img = ramp(8);
    const auto out = cam_overlay(img, vision::HeatMap{2, 2, std::vector<float>(4, 0.0f)});
    for (std::size_t i = 0; i < img.pixels().size(); ++i) {
        const auto g = io::quantize(img.pixels()[i]);
        EXPECT_EQ(out.rgb[3 * i], g);
        EXPECT_EQ(out.rgb[3 * i + 1], g);
        EXPECT_EQ(out.rgb[3 * i + 2], g);
    }
}

TEST(Overlay, RedPeaksInHotQuadrant) {
    const vision::GrayImage img(16, 16, 0.3f);
    vision::HeatMap cam{4, 4, std::vector<float>(16, 0.0f)};
    cam.values[3 * 4 + 3] = 1.0f;  // bottom-right cell
    const auto out = cam_overlay(img, cam);
    int best = 0;
    for (int i = 1; i < 16 * 16; ++i)
        if (out.rgb[3 * i] > out.rgb[3 * best]) best = i;
    EXPECT_GE(best / 16, 8);
    EXPECT_GE(best % 16, 8);
}

TEST(Overlay, FileIsDeterministic) {
    const auto dir = std::filesystem::temp_directory_path() / "attnfuse_render_test";
    std::filesystem::create_directories(dir);
    const auto img = ramp(12);
    const vision::HeatMap cam{3, 3, {0.0f, 0.2f, 0.4f, 0.1f, 1.0f, 0.3f, 0.0f, 0.5f, 0.9f}};
    render_cam_overlay(img, cam, dir / "a.ppm");
    render_cam_overlay(img, cam, dir / "b.ppm");
    EXPECT_EQ(slurp(dir / "a.ppm"), slurp(dir / "b.ppm"));
    EXPECT_EQ(io::read_ppm(dir / "a.ppm").rgb, cam_overlay(img, cam).rgb);
    std::filesystem::remove_all(dir);
}

TEST(Overlay, UnwritablePathIsIoError) {
    EXPECT_THROW(render_cam_overlay(ramp(4), vision::HeatMap{1, 1, {0.0f}}, "/dev/null/x.ppm"), IoError);
}
