#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "attnfuse/vision.hpp"

namespace attnfuse::io {

/// 8-bit RGB raster, row-major interleaved.
struct RgbImage {
    int height = 0;
    int width = 0;
    std::vector<std::uint8_t> rgb;
};

/// Binary PGM (P5, maxval 255). Pixels are quantized with round-to-nearest.
void write_pgm(const std::filesystem::path& path, const vision::GrayImage& img);
vision::GrayImage read_pgm(const std::filesystem::path& path);

/// Masks are stored as PGM with 0 / 255; reading treats any nonzero as set.
void write_mask_pgm(const std::filesystem::path& path, const vision::BinaryMask& mask);
vision::BinaryMask read_mask_pgm(const std::filesystem::path& path);

/// Binary PPM (P6, maxval 255).
void write_ppm(const std::filesystem::path& path, const RgbImage& img);
RgbImage read_ppm(const std::filesystem::path& path);

std::uint8_t quantize(float v);

}  // namespace attnfuse::io
