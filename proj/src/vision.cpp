#include "attnfuse/vision.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace attnfuse::vision {

GrayImage::GrayImage(int height, int width, float fill)
    : GrayImage(height, width, std::vector<float>(static_cast<std::size_t>(std::max(height, 0)) * std::max(width, 0), fill)) {}

GrayImage::GrayImage(int height, int width, std::vector<float> pixels)
    : height_(height), width_(width), pixels_(std::move(pixels)) {
    if (height <= 0 || width <= 0) throw DimensionError("GrayImage: dimensions must be positive");
    if (pixels_.size() != static_cast<std::size_t>(height) * width) {
        throw DimensionError("GrayImage: " + std::to_string(pixels_.size()) + " pixels for " +
                             std::to_string(height) + "x" + std::to_string(width));
    }
    for (float& p : pixels_) p = std::isfinite(p) ? std::clamp(p, 0.0f, 1.0f) : 0.0f;
}

Tensor GrayImage::to_tensor() const { return Tensor({1, height_, width_}, pixels_); }

BinaryMask::BinaryMask(int height, int width)
    : height_(height), width_(width), bits_(static_cast<std::size_t>(height) * width, 0) {
    if (height <= 0 || width <= 0) throw DimensionError("BinaryMask: dimensions must be positive");
}

std::size_t BinaryMask::count() const {
    return static_cast<std::size_t>(std::count(bits_.begin(), bits_.end(), std::uint8_t{1}));
}

bool BinaryMask::subset_of(const BinaryMask& other) const {
    if (height_ != other.height_ || width_ != other.width_) return false;
    for (std::size_t i = 0; i < bits_.size(); ++i) {
        if (bits_[i] && !other.bits_[i]) return false;
    }
    return true;
}

HeatMap heatmap_normalize(const Tensor& activations) {
    if (activations.rank() != 3 || activations.dim(0) < 1) {
        throw DimensionError("heatmap_normalize: expected [K,h,w] with K >= 1, got " +
                             shape_string(activations.shape()));
    }
    const int k = activations.dim(0), h = activations.dim(1), w = activations.dim(2);
    const std::size_t plane = static_cast<std::size_t>(h) * w;
    std::vector<float> sum(plane, 0.0f);
    for (int c = 0; c < k; ++c) {
        for (std::size_t i = 0; i < plane; ++i) {
            const float v = activations[c * plane + i];
            if (v < 0.0f || !std::isfinite(v)) {
                throw ValidationError("heatmap_normalize: activation at channel " + std::to_string(c) +
                                      " is negative or non-finite");
            }
            sum[i] += v;
        }
    }
    const auto [mn, mx] = std::minmax_element(sum.begin(), sum.end());
    const float lo = *mn, hi = *mx;
    HeatMap out{h, w, std::vector<float>(plane, 0.0f)};
    if (hi > 0.0f) {
        for (std::size_t i = 0; i < plane; ++i) out.values[i] = (sum[i] - lo) / hi;
    }
    return out;
}

BinaryMask binarize(const HeatMap& h, float tau) {
    if (!(tau >= 0.0f && tau <= 1.0f)) throw RangeError("binarize: tau must be in [0,1]");
    BinaryMask m(h.height, h.width);
    for (int r = 0; r < h.height; ++r)
        for (int c = 0; c < h.width; ++c) m.set(r, c, h.at(r, c) > tau);
    return m;
}

std::optional<BinaryMask> max_connected_component(const BinaryMask& mask) {
    const int h = mask.height(), w = mask.width();
    std::vector<int> label(static_cast<std::size_t>(h) * w, -1);
    std::vector<int> stack;
    int best_label = -1;
    std::size_t best_size = 0;
    int next = 0;
    for (int r = 0; r < h; ++r) {
        for (int c = 0; c < w; ++c) {
            const std::size_t start = static_cast<std::size_t>(r) * w + c;
            if (!mask.at(r, c) || label[start] >= 0) continue;
            const int id = next++;
            std::size_t size = 0;
            label[start] = id;
            stack.assign(1, static_cast<int>(start));
            while (!stack.empty()) {
                const int cur = stack.back();
                stack.pop_back();
                ++size;
                const int cr = cur / w, cc = cur % w;
                for (int dr = -1; dr <= 1; ++dr) {
                    for (int dc = -1; dc <= 1; ++dc) {
                        const int nr = cr + dr, nc = cc + dc;
                        if (nr < 0 || nr >= h || nc < 0 || nc >= w) continue;
                        const std::size_t ni = static_cast<std::size_t>(nr) * w + nc;
                        if (mask.at(nr, nc) && label[ni] < 0) {
                            label[ni] = id;
                            stack.push_back(static_cast<int>(ni));
                        }
                    }
                }
            }
            // Strict comparison keeps the earlier-discovered component on ties.
            if (size > best_size) {
                best_size = size;
                best_label = id;
            }
        }
    }
    if (best_label < 0) return std::nullopt;
    BinaryMask out(h, w);
    for (int r = 0; r < h; ++r)
        for (int c = 0; c < w; ++c)
            if (label[static_cast<std::size_t>(r) * w + c] == best_label) out.set(r, c, true);
    return out;
}

BoundingBox bbox_of_mask(const BinaryMask& mask) {
    BoundingBox box{std::numeric_limits<int>::max(), -1, std::numeric_limits<int>::max(), -1};
    for (int r = 0; r < mask.height(); ++r) {
        for (int c = 0; c < mask.width(); ++c) {
            if (!mask.at(r, c)) continue;
            box.row_min = std::min(box.row_min, r);
            box.row_max = std::max(box.row_max, r);
            box.col_min = std::min(box.col_min, c);
            box.col_max = std::max(box.col_max, c);
        }
    }
    if (box.row_max < 0) throw EmptyRegionError("bbox_of_mask: mask has no set cells");
    return box;
}

BoundingBox scale_box(const BoundingBox& box, int from_h, int from_w, int to_h, int to_w) {
    if (from_h <= 0 || from_w <= 0 || to_h <= 0 || to_w <= 0) throw DimensionError("scale_box: non-positive grid");
    if (box.row_min < 0 || box.col_min < 0 || box.row_max >= from_h || box.col_max >= from_w ||
        box.row_min > box.row_max || box.col_min > box.col_max) {
        throw RangeError("scale_box: box outside the source grid");
    }
    auto lo = [](int v, int to, int from) { return static_cast<int>((static_cast<long long>(v) * to) / from); };
    auto hi = [](int v, int to, int from) {
        const long long num = static_cast<long long>(v + 1) * to;
        return static_cast<int>((num + from - 1) / from) - 1;
    };
    return BoundingBox{lo(box.row_min, to_h, from_h), hi(box.row_max, to_h, from_h), lo(box.col_min, to_w, from_w),
                       hi(box.col_max, to_w, from_w)};
}

namespace {

float sample_bilinear(const GrayImage& img, int r0, int c0, int h, int w, float sy, float sx) {
    sy = std::clamp(sy, 0.0f, static_cast<float>(h - 1));
    sx = std::clamp(sx, 0.0f, static_cast<float>(w - 1));
    const int y0 = static_cast<int>(std::floor(sy));
    const int x0 = static_cast<int>(std::floor(sx));
    const int y1 = std::min(y0 + 1, h - 1);
    const int x1 = std::min(x0 + 1, w - 1);
    const float fy = sy - static_cast<float>(y0);
    const float fx = sx - static_cast<float>(x0);
    const float top = img.at(r0 + y0, c0 + x0) * (1.0f - fx) + img.at(r0 + y0, c0 + x1) * fx;
    const float bot = img.at(r0 + y1, c0 + x0) * (1.0f - fx) + img.at(r0 + y1, c0 + x1) * fx;
    return top * (1.0f - fy) + bot * fy;
}

}  // namespace

GrayImage crop_resize(const GrayImage& img, const BoundingBox& box, int out_h, int out_w) {
    if (box.row_min < 0 || box.col_min < 0 || box.row_max >= img.height() || box.col_max >= img.width() ||
        box.row_min > box.row_max || box.col_min > box.col_max) {
        throw RangeError("crop_resize: box rows [" + std::to_string(box.row_min) + "," + std::to_string(box.row_max) +
                         "] cols [" + std::to_string(box.col_min) + "," + std::to_string(box.col_max) +
                         "] outside image " + std::to_string(img.height()) + "x" + std::to_string(img.width()));
    }
    if (out_h <= 0 || out_w <= 0) throw DimensionError("crop_resize: output size must be positive");
    const int h = box.height(), w = box.width();
    const float scale_y = static_cast<float>(h) / static_cast<float>(out_h);
    const float scale_x = static_cast<float>(w) / static_cast<float>(out_w);
    std::vector<float> px(static_cast<std::size_t>(out_h) * out_w);
    for (int r = 0; r < out_h; ++r) {
        const float sy = (static_cast<float>(r) + 0.5f) * scale_y - 0.5f;
        for (int c = 0; c < out_w; ++c) {
            const float sx = (static_cast<float>(c) + 0.5f) * scale_x - 0.5f;
            px[static_cast<std::size_t>(r) * out_w + c] = sample_bilinear(img, box.row_min, box.col_min, h, w, sy, sx);
        }
    }
    return GrayImage(out_h, out_w, std::move(px));
}

GrayImage resize_bilinear(const GrayImage& img, int out_h, int out_w) {
    return crop_resize(img, BoundingBox{0, img.height() - 1, 0, img.width() - 1}, out_h, out_w);
}

BinaryMask resize_nearest(const BinaryMask& mask, int out_h, int out_w) {
    BinaryMask out(out_h, out_w);
    for (int r = 0; r < out_h; ++r) {
        const int sr = static_cast<int>((static_cast<long long>(r) * mask.height()) / out_h);
        for (int c = 0; c < out_w; ++c) {
            const int sc = static_cast<int>((static_cast<long long>(c) * mask.width()) / out_w);
            out.set(r, c, mask.at(sr, sc));
        }
    }
    return out;
}

InfectedSplit split_infected_lr(const BinaryMask& mask, const GrayImage& img, int out) {
    if (img.width() < 2) throw DimensionError("split_infected_lr: image narrower than 2 columns");
    const BinaryMask m = (mask.height() == img.height() && mask.width() == img.width())
                             ? mask
                             : resize_nearest(mask, img.height(), img.width());
    const int mid = img.width() / 2;
    InfectedSplit res;
    auto half = [&](int c0, int c1, GrayImage& crop, bool& fallback, BoundingBox& box) {
        BinaryMask part(m.height(), m.width());
        bool any = false;
        for (int r = 0; r < m.height(); ++r)
            for (int c = c0; c <= c1; ++c)
                if (m.at(r, c)) {
                    part.set(r, c, true);
                    any = true;
                }
        if (any) {
            box = bbox_of_mask(part);
            fallback = false;
        } else {
            box = BoundingBox{0, img.height() - 1, c0, c1};
            fallback = true;
        }
        crop = crop_resize(img, box, out, out);
    };
    half(0, mid - 1, res.left, res.left_fallback, res.left_box);
    half(mid, img.width() - 1, res.right, res.right_fallback, res.right_box);
    return res;
}

}  // namespace attnfuse::vision
