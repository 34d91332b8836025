#pragma once

#include <filesystem>

#include "attnfuse/image_io.hpp"
#include "attnfuse/vision.hpp"

namespace attnfuse::evalviz {

/// Blends a grayscale image with a red heat layer. The CAM is bilinearly
/// resized to the image; at each pixel alpha = 0.6 * cam and
///   r = (1 - alpha) * g + alpha,  g' = b' = (1 - alpha) * g.
/// A zero CAM reproduces the grayscale rendering exactly.
io::RgbImage cam_overlay(const vision::GrayImage& img, const vision::HeatMap& cam);

void render_cam_overlay(const vision::GrayImage& img, const vision::HeatMap& cam, const std::filesystem::path& out);

}  // namespace attnfuse::evalviz
