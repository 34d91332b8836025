#include "attnfuse/render.hpp"

namespace attnfuse::evalviz {

io::RgbImage cam_overlay(const vision::GrayImage& img, const vision::HeatMap& cam) {
    const vision::GrayImage heat_small(cam.height, cam.width, cam.values);
    const vision::GrayImage heat = (cam.height == img.height() && cam.width == img.width())
                                       ? heat_small
                                       : vision::resize_bilinear(heat_small, img.height(), img.width());
    io::RgbImage out{img.height(), img.width(), std::vector<std::uint8_t>(img.pixels().size() * 3)};
    for (std::size_t i = 0; i < img.pixels().size(); ++i) {
        const float g = img.pixels()[i];
        const float a = 0.6f * heat.pixels()[i];
        out.rgb[3 * i] = io::quantize((1.0f - a) * g + a);
        out.rgb[3 * i + 1] = io::quantize((1.0f - a) * g);
        out.rgb[3 * i + 2] = io::quantize((1.0f - a) * g);
    }
    return out;
}

void render_cam_overlay(const vision::GrayImage& img, const vision::HeatMap& cam, const std::filesystem::path& out) {
    io::write_ppm(out, cam_overlay(img, cam));
}

}  // namespace attnfuse::evalviz
