#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "attnfuse/tensor.hpp"

namespace attnfuse::vision {

/// Single-channel image with intensities in [0,1], row-major.
class GrayImage {
public:
    GrayImage() = default;
    GrayImage(int height, int width, float fill = 0.0f);
    GrayImage(int height, int width, std::vector<float> pixels);

    int height() const noexcept { return height_; }
    int width() const noexcept { return width_; }
    float& at(int r, int c) { return pixels_[static_cast<std::size_t>(r) * width_ + c]; }
    float at(int r, int c) const { return pixels_[static_cast<std::size_t>(r) * width_ + c]; }
    const std::vector<float>& pixels() const noexcept { return pixels_; }

    /// [1,H,W] tensor view of the pixels.
    Tensor to_tensor() const;

    friend bool operator==(const GrayImage&, const GrayImage&) = default;

private:
    int height_ = 0;
    int width_ = 0;
    std::vector<float> pixels_;
};

struct HeatMap {
    int height = 0;
    int width = 0;
    std::vector<float> values;

    float at(int r, int c) const { return values[static_cast<std::size_t>(r) * width + c]; }
};

class BinaryMask {
public:
    BinaryMask() = default;
    BinaryMask(int height, int width);

    int height() const noexcept { return height_; }
    int width() const noexcept { return width_; }
    bool at(int r, int c) const { return bits_[static_cast<std::size_t>(r) * width_ + c] != 0; }
    void set(int r, int c, bool v) { bits_[static_cast<std::size_t>(r) * width_ + c] = v ? 1 : 0; }
    std::size_t count() const;
    bool empty() const { return count() == 0; }
    const std::vector<std::uint8_t>& bits() const noexcept { return bits_; }

    /// True when every set cell of *this is also set in `other`.
    bool subset_of(const BinaryMask& other) const;

    friend bool operator==(const BinaryMask&, const BinaryMask&) = default;

private:
    int height_ = 0;
    int width_ = 0;
    std::vector<std::uint8_t> bits_;
};

/// Inclusive pixel box.
struct BoundingBox {
    int row_min = 0;
    int row_max = 0;
    int col_min = 0;
    int col_max = 0;

    int height() const noexcept { return row_max - row_min + 1; }
    int width() const noexcept { return col_max - col_min + 1; }
    bool contains(int r, int c) const noexcept {
        return r >= row_min && r <= row_max && c >= col_min && c <= col_max;
    }
    friend bool operator==(const BoundingBox&, const BoundingBox&) = default;
};

/// H = (S - min S) / max S with S the channel sum of [K,h,w] activations.
/// All-zero activations give H = 0. Negative activations are rejected.
HeatMap heatmap_normalize(const Tensor& activations);

/// B = 1 where H > tau (strict).
BinaryMask binarize(const HeatMap& h, float tau);

/// Largest 8-connected component. On equal sizes the component whose first
/// cell in row-major order comes earliest wins. nullopt for an empty mask.
std::optional<BinaryMask> max_connected_component(const BinaryMask& mask);

/// Tightest box around the set cells. Throws EmptyRegionError on an empty mask.
BoundingBox bbox_of_mask(const BinaryMask& mask);

/// Maps a box on an h×w grid to the covering box on an H×W grid.
BoundingBox scale_box(const BoundingBox& box, int from_h, int from_w, int to_h, int to_w);

/// Bilinear resize with half-pixel centers (align_corners = false).
GrayImage resize_bilinear(const GrayImage& img, int out_h, int out_w);

/// Crops `box` (image coordinates) and resizes the crop to out_h×out_w.
GrayImage crop_resize(const GrayImage& img, const BoundingBox& box, int out_h, int out_w);

/// Nearest-neighbour rescale of a mask.
BinaryMask resize_nearest(const BinaryMask& mask, int out_h, int out_w);

struct InfectedSplit {
    GrayImage left;
    GrayImage right;
    bool left_fallback = false;
    bool right_fallback = false;
    BoundingBox left_box;
    BoundingBox right_box;
};

/// Splits a lesion mask at the vertical midline (left half = columns
/// [0, W/2)). Each half with lesion cells yields a tight crop; an empty half
/// yields the whole half-image and sets its fallback flag. Both crops are
/// resized to out×out. The mask is rescaled to the image first if needed.
InfectedSplit split_infected_lr(const BinaryMask& mask, const GrayImage& img, int out);

}  // namespace attnfuse::vision
