#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <vector>

#include "attnfuse/autograd.hpp"

// Differentiable layer operations. Each op computes its forward value eagerly
// and registers a backward rule on the tape. Accumulation is sequential in
// row-major order so results are reproducible bit for bit.
namespace attnfuse::ops {

namespace detail {

inline void require_rank(const Shape& s, int rank, const char* op, const char* what) {
    if (static_cast<int>(s.size()) != rank) {
        throw DimensionError(std::string(op) + ": " + what + " must have rank " + std::to_string(rank) +
                             ", got " + shape_string(s));
    }
}

// Range of output columns ox for which ox*stride + offset lands inside [0, extent).
inline void valid_range(int out_extent, int stride, int offset, int extent, int& lo, int& hi) {
    lo = 0;
    while (lo < out_extent && lo * stride + offset < 0) ++lo;
    hi = out_extent;
    while (hi > lo && (hi - 1) * stride + offset >= extent) --hi;
}

}  // namespace detail

/// 2-D cross-correlation. input [Cin,H,W], kernel [Cout,Cin,kh,kw], bias [Cout].
template <class T>
Var conv2d(Tape<T>& tape, Var input, Var kernel, Var bias, int stride, int pad) {
    const auto& x = tape.value(input);
    const auto& w = tape.value(kernel);
    const auto& b = tape.value(bias);
    detail::require_rank(x.shape(), 3, "conv2d", "input");
    detail::require_rank(w.shape(), 4, "conv2d", "kernel");
    detail::require_rank(b.shape(), 1, "conv2d", "bias");
    if (stride < 1) throw DimensionError("conv2d: stride must be >= 1");
    if (pad < 0) throw DimensionError("conv2d: pad must be >= 0");
    const int cin = x.dim(0), h = x.dim(1), wd = x.dim(2);
    const int cout = w.dim(0), kh = w.dim(2), kw = w.dim(3);
    if (w.dim(1) != cin) {
        throw DimensionError("conv2d: kernel input channels (axis 1) = " + std::to_string(w.dim(1)) +
                             " but input channels (axis 0) = " + std::to_string(cin));
    }
    if (b.dim(0) != cout) {
        throw DimensionError("conv2d: bias length " + std::to_string(b.dim(0)) + " != kernel output channels (axis 0) " +
                             std::to_string(cout));
    }
    if (kh > h + 2 * pad || kw > wd + 2 * pad) {
        throw DimensionError("conv2d: kernel " + std::to_string(kh) + "x" + std::to_string(kw) +
                             " exceeds padded input " + std::to_string(h + 2 * pad) + "x" +
                             std::to_string(wd + 2 * pad) + " (axes 1,2)");
    }
    const int oh = (h + 2 * pad - kh) / stride + 1;
    const int ow = (wd + 2 * pad - kw) / stride + 1;

    BasicTensor<T> out({cout, oh, ow});
    const T* xp = x.data().data();
    const T* wp = w.data().data();
    T* op = out.data().data();
    const std::size_t plane = static_cast<std::size_t>(h) * wd;
    const std::size_t oplane = static_cast<std::size_t>(oh) * ow;
    for (int co = 0; co < cout; ++co) {
        T* o = op + co * oplane;
        std::fill(o, o + oplane, b[co]);
        for (int ci = 0; ci < cin; ++ci) {
            const T* xc = xp + ci * plane;
            for (int ky = 0; ky < kh; ++ky) {
                int ylo, yhi;
                detail::valid_range(oh, stride, ky - pad, h, ylo, yhi);
                for (int kx = 0; kx < kw; ++kx) {
                    const T wv = wp[((static_cast<std::size_t>(co) * cin + ci) * kh + ky) * kw + kx];
                    int xlo, xhi;
                    detail::valid_range(ow, stride, kx - pad, wd, xlo, xhi);
                    for (int oy = ylo; oy < yhi; ++oy) {
                        const T* xrow = xc + static_cast<std::size_t>(oy * stride + ky - pad) * wd + (kx - pad);
                        T* orow = o + static_cast<std::size_t>(oy) * ow;
                        if (stride == 1) {
                            for (int ox = xlo; ox < xhi; ++ox) orow[ox] += wv * xrow[ox];
                        } else {
                            for (int ox = xlo; ox < xhi; ++ox) orow[ox] += wv * xrow[ox * stride];
                        }
                    }
                }
            }
        }
    }

    const bool rg = tape.requires_grad(input) || tape.requires_grad(kernel) || tape.requires_grad(bias);
    return tape.emplace(std::move(out), rg, [=](Tape<T>& t, std::size_t self) {
        const auto& g = t.grad_of(self);
        const T* gp = g.data().data();
        if (t.requires_grad(bias)) {
            auto& gb = t.grad_mut(bias.id);
            for (int co = 0; co < cout; ++co) {
                T s{0};
                const T* gc = gp + co * oplane;
                for (std::size_t i = 0; i < oplane; ++i) s += gc[i];
                gb[co] += s;
            }
        }
        const bool need_x = t.requires_grad(input);
        const bool need_w = t.requires_grad(kernel);
        if (!need_x && !need_w) return;
        const T* xv = t.value(input).data().data();
        const T* wv_all = t.value(kernel).data().data();
        T* gx = need_x ? t.grad_mut(input.id).data().data() : nullptr;
        T* gw = need_w ? t.grad_mut(kernel.id).data().data() : nullptr;
        for (int co = 0; co < cout; ++co) {
            const T* gc = gp + co * oplane;
            for (int ci = 0; ci < cin; ++ci) {
                const T* xc = xv + ci * plane;
                T* gxc = need_x ? gx + ci * plane : nullptr;
                for (int ky = 0; ky < kh; ++ky) {
                    int ylo, yhi;
                    detail::valid_range(oh, stride, ky - pad, h, ylo, yhi);
                    for (int kx = 0; kx < kw; ++kx) {
                        const std::size_t widx = ((static_cast<std::size_t>(co) * cin + ci) * kh + ky) * kw + kx;
                        const T wv = wv_all[widx];
                        int xlo, xhi;
                        detail::valid_range(ow, stride, kx - pad, wd, xlo, xhi);
                        T acc{0};
                        for (int oy = ylo; oy < yhi; ++oy) {
                            const std::size_t xoff = static_cast<std::size_t>(oy * stride + ky - pad) * wd + (kx - pad);
                            const T* grow = gc + static_cast<std::size_t>(oy) * ow;
                            const T* xrow = xc + xoff;
                            if (stride == 1) {
                                if (need_w) {
                                    for (int ox = xlo; ox < xhi; ++ox) acc += grow[ox] * xrow[ox];
                                }
                                if (need_x) {
                                    T* gxrow = gxc + xoff;
                                    for (int ox = xlo; ox < xhi; ++ox) gxrow[ox] += wv * grow[ox];
                                }
                            } else {
                                for (int ox = xlo; ox < xhi; ++ox) {
                                    if (need_w) acc += grow[ox] * xrow[ox * stride];
                                    if (need_x) gxc[xoff + static_cast<std::size_t>(ox) * stride] += wv * grow[ox];
                                }
                            }
                        }
                        if (need_w) gw[widx] += acc;
                    }
                }
            }
        }
    });
}

template <class T>
Var relu(Tape<T>& tape, Var x) {
    BasicTensor<T> out = tape.value(x);
    for (auto& v : out.data()) v = v > T{0} ? v : T{0};
    return tape.emplace(std::move(out), tape.requires_grad(x), [=](Tape<T>& t, std::size_t self) {
        const auto& g = t.grad_of(self);
        const auto& xv = t.value(x);
        auto& gx = t.grad_mut(x.id);
        for (std::size_t i = 0; i < g.size(); ++i) {
            if (xv[i] > T{0}) gx[i] += g[i];
        }
    });
}

/// Max pooling over k×k windows. On an axis shorter than k the window is
/// clipped to the axis, so a 1×4 row pools as 1×2 windows. Ties route the
/// gradient to the first maximum in row-major window order.
template <class T>
Var maxpool2d(Tape<T>& tape, Var x, int k, int stride) {
    const auto& in = tape.value(x);
    detail::require_rank(in.shape(), 3, "maxpool2d", "input");
    if (k < 1 || stride < 1) throw DimensionError("maxpool2d: window and stride must be >= 1");
    const int c = in.dim(0), h = in.dim(1), w = in.dim(2);
    if (h < 1 || w < 1) throw DimensionError("maxpool2d: empty spatial axes " + shape_string(in.shape()));
    const int kh = std::min(k, h), kw = std::min(k, w);
    const int oh = (h - kh) / stride + 1;
    const int ow = (w - kw) / stride + 1;
    BasicTensor<T> out({c, oh, ow});
    std::vector<std::size_t> argmax(out.size());
    std::size_t o = 0;
    for (int ch = 0; ch < c; ++ch) {
        for (int oy = 0; oy < oh; ++oy) {
            for (int ox = 0; ox < ow; ++ox, ++o) {
                std::size_t best = (static_cast<std::size_t>(ch) * h + oy * stride) * w + ox * stride;
                T bv = in[best];
                for (int dy = 0; dy < kh; ++dy) {
                    for (int dx = 0; dx < kw; ++dx) {
                        const std::size_t idx = (static_cast<std::size_t>(ch) * h + oy * stride + dy) * w + ox * stride + dx;
                        if (in[idx] > bv) {
                            bv = in[idx];
                            best = idx;
                        }
                    }
                }
                out[o] = bv;
                argmax[o] = best;
            }
        }
    }
    return tape.emplace(std::move(out), tape.requires_grad(x),
                        [=, argmax = std::move(argmax)](Tape<T>& t, std::size_t self) {
                            const auto& g = t.grad_of(self);
                            auto& gx = t.grad_mut(x.id);
                            for (std::size_t i = 0; i < g.size(); ++i) gx[argmax[i]] += g[i];
                        });
}

/// Per-channel spatial mean: [K,h,w] -> [K].
template <class T>
Var global_avg_pool(Tape<T>& tape, Var x) {
    const auto& in = tape.value(x);
    detail::require_rank(in.shape(), 3, "global_avg_pool", "input");
    const int k = in.dim(0);
    const std::size_t plane = static_cast<std::size_t>(in.dim(1)) * in.dim(2);
    if (plane == 0) throw DimensionError("global_avg_pool: empty spatial extent");
    BasicTensor<T> out({k});
    for (int c = 0; c < k; ++c) {
        T s{0};
        for (std::size_t i = 0; i < plane; ++i) s += in[c * plane + i];
        out[c] = s / static_cast<T>(plane);
    }
    return tape.emplace(std::move(out), tape.requires_grad(x), [=](Tape<T>& t, std::size_t self) {
        const auto& g = t.grad_of(self);
        auto& gx = t.grad_mut(x.id);
        const T inv = T{1} / static_cast<T>(plane);
        for (int c = 0; c < k; ++c) {
            const T gc = g[c] * inv;
            for (std::size_t i = 0; i < plane; ++i) gx[c * plane + i] += gc;
        }
    });
}

/// weight·x + bias with x [D], weight [C,D], bias [C].
template <class T>
Var fully_connected(Tape<T>& tape, Var x, Var weight, Var bias) {
    const auto& xv = tape.value(x);
    const auto& w = tape.value(weight);
    const auto& b = tape.value(bias);
    detail::require_rank(xv.shape(), 1, "fully_connected", "input");
    detail::require_rank(w.shape(), 2, "fully_connected", "weight");
    detail::require_rank(b.shape(), 1, "fully_connected", "bias");
    const int c = w.dim(0), d = w.dim(1);
    if (xv.dim(0) != d) {
        throw DimensionError("fully_connected: input length " + std::to_string(xv.dim(0)) +
                             " != weight columns (axis 1) " + std::to_string(d));
    }
    if (b.dim(0) != c) {
        throw DimensionError("fully_connected: bias length " + std::to_string(b.dim(0)) +
                             " != weight rows (axis 0) " + std::to_string(c));
    }
    BasicTensor<T> out({c});
    for (int i = 0; i < c; ++i) {
        T s = b[i];
        for (int j = 0; j < d; ++j) s += w[static_cast<std::size_t>(i) * d + j] * xv[j];
        out[i] = s;
    }
    const bool rg = tape.requires_grad(x) || tape.requires_grad(weight) || tape.requires_grad(bias);
    return tape.emplace(std::move(out), rg, [=](Tape<T>& t, std::size_t self) {
        const auto& g = t.grad_of(self);
        if (t.requires_grad(bias)) {
            auto& gb = t.grad_mut(bias.id);
            for (int i = 0; i < c; ++i) gb[i] += g[i];
        }
        if (t.requires_grad(weight)) {
            const auto& xs = t.value(x);
            auto& gw = t.grad_mut(weight.id);
            for (int i = 0; i < c; ++i)
                for (int j = 0; j < d; ++j) gw[static_cast<std::size_t>(i) * d + j] += g[i] * xs[j];
        }
        if (t.requires_grad(x)) {
            const auto& ws = t.value(weight);
            auto& gx = t.grad_mut(x.id);
            for (int i = 0; i < c; ++i)
                for (int j = 0; j < d; ++j) gx[j] += g[i] * ws[static_cast<std::size_t>(i) * d + j];
        }
    });
}

template <class T>
inline T sigmoid_scalar(T v) {
    T s;
    if (v >= T{0}) {
        s = T{1} / (T{1} + std::exp(-v));
    } else {
        const T e = std::exp(v);
        s = e / (T{1} + e);
    }
    // Saturated values are pulled back inside the open interval.
    return std::clamp(s, std::numeric_limits<T>::min(), std::nextafter(T{1}, T{0}));
}

/// Elementwise logistic function, output strictly inside (0,1).
template <class T>
Var sigmoid(Tape<T>& tape, Var x) {
    BasicTensor<T> out = tape.value(x);
    for (auto& v : out.data()) v = sigmoid_scalar(v);
    return tape.emplace(std::move(out), tape.requires_grad(x), [=](Tape<T>& t, std::size_t self) {
        const auto& g = t.grad_of(self);
        const auto& s = t.value(Var{self});
        auto& gx = t.grad_mut(x.id);
        for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * s[i] * (T{1} - s[i]);
    });
}

inline constexpr double kBceEpsilon = 1e-7;

/// Mean binary cross-entropy between probabilities and {0,1} labels.
/// Probabilities are clamped to [eps, 1-eps]. `pos_weight` scales the terms
/// of positive labels (1 gives the plain loss).
template <class T>
Var bce_loss(Tape<T>& tape, Var probs, const BasicTensor<T>& labels, T pos_weight = T{1}) {
    const auto& p = tape.value(probs);
    if (p.shape() != labels.shape()) {
        throw DimensionError("bce_loss: probabilities " + shape_string(p.shape()) + " vs labels " +
                             shape_string(labels.shape()));
    }
    if (p.size() == 0) throw DimensionError("bce_loss: empty input");
    if (!(pos_weight > T{0})) throw RangeError("bce_loss: positive weight must be > 0");
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] != T{0} && labels[i] != T{1}) {
            throw ValidationError("bce_loss: label at index " + std::to_string(i) + " is not 0 or 1");
        }
    }
    const T eps = static_cast<T>(kBceEpsilon);
    const T n = static_cast<T>(p.size());
    T s{0};
    for (std::size_t i = 0; i < p.size(); ++i) {
        const T q = std::clamp(p[i], eps, T{1} - eps);
        s += pos_weight * labels[i] * std::log(q) + (T{1} - labels[i]) * std::log(T{1} - q);
    }
    BasicTensor<T> out({1}, std::vector<T>{-s / n});
    return tape.emplace(std::move(out), tape.requires_grad(probs), [=](Tape<T>& t, std::size_t self) {
        const T g = t.grad_of(self)[0];
        const auto& pv = t.value(probs);
        auto& gp = t.grad_mut(probs.id);
        for (std::size_t i = 0; i < pv.size(); ++i) {
            const T q = std::clamp(pv[i], eps, T{1} - eps);
            if (pos_weight == T{1}) {
                gp[i] += g * (q - labels[i]) / (n * q * (T{1} - q));
            } else {
                gp[i] += g * ((T{1} - labels[i]) / (T{1} - q) - pos_weight * labels[i] / q) / n;
            }
        }
    });
}

/// Concatenation along axis 0. Trailing dimensions must agree.
template <class T>
Var concat(Tape<T>& tape, const std::vector<Var>& parts) {
    if (parts.empty()) throw DimensionError("concat: no inputs");
    Shape tail(tape.value(parts[0]).shape().begin() + 1, tape.value(parts[0]).shape().end());
    int lead = 0;
    bool rg = false;
    std::vector<T> data;
    for (Var p : parts) {
        const auto& v = tape.value(p);
        Shape t(v.shape().begin() + 1, v.shape().end());
        if (t != tail || v.rank() == 0) {
            throw DimensionError("concat: trailing shape " + shape_string(v.shape()) + " incompatible with " +
                                 shape_string(tape.value(parts[0]).shape()));
        }
        lead += v.dim(0);
        rg = rg || tape.requires_grad(p);
        data.insert(data.end(), v.data().begin(), v.data().end());
    }
    Shape shape{lead};
    shape.insert(shape.end(), tail.begin(), tail.end());
    return tape.emplace(BasicTensor<T>(shape, std::move(data)), rg, [parts](Tape<T>& t, std::size_t self) {
        const auto& g = t.grad_of(self);
        std::size_t off = 0;
        for (Var p : parts) {
            const std::size_t n = t.value(p).size();
            if (t.requires_grad(p)) {
                auto& gp = t.grad_mut(p.id);
                for (std::size_t i = 0; i < n; ++i) gp[i] += g[off + i];
            }
            off += n;
        }
    });
}

/// Nearest-neighbour 2x upsampling of [C,H,W].
template <class T>
Var upsample2x(Tape<T>& tape, Var x) {
    const auto& in = tape.value(x);
    detail::require_rank(in.shape(), 3, "upsample2x", "input");
    const int c = in.dim(0), h = in.dim(1), w = in.dim(2);
    BasicTensor<T> out({c, 2 * h, 2 * w});
    for (int ch = 0; ch < c; ++ch)
        for (int y = 0; y < 2 * h; ++y)
            for (int xx = 0; xx < 2 * w; ++xx) out.at(ch, y, xx) = in.at(ch, y / 2, xx / 2);
    return tape.emplace(std::move(out), tape.requires_grad(x), [=](Tape<T>& t, std::size_t self) {
        const auto& g = t.grad_of(self);
        auto& gx = t.grad_mut(x.id);
        for (int ch = 0; ch < c; ++ch)
            for (int y = 0; y < 2 * h; ++y)
                for (int xx = 0; xx < 2 * w; ++xx) gx.at(ch, y / 2, xx / 2) += g.at(ch, y, xx);
    });
}

/// Elementwise sum of two same-shape values.
template <class T>
Var add(Tape<T>& tape, Var a, Var b) {
    const auto& av = tape.value(a);
    const auto& bv = tape.value(b);
    if (av.shape() != bv.shape()) {
        throw DimensionError("add: " + shape_string(av.shape()) + " vs " + shape_string(bv.shape()));
    }
    BasicTensor<T> out = av;
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += bv[i];
    const bool rg = tape.requires_grad(a) || tape.requires_grad(b);
    return tape.emplace(std::move(out), rg, [=](Tape<T>& t, std::size_t self) {
        const auto& g = t.grad_of(self);
        for (Var v : {a, b}) {
            if (!t.requires_grad(v)) continue;
            auto& gv = t.grad_mut(v.id);
            for (std::size_t i = 0; i < g.size(); ++i) gv[i] += g[i];
        }
    });
}

/// y = scale * (x - shift), elementwise.
template <class T>
Var affine(Tape<T>& tape, Var x, T shift, T scale) {
    BasicTensor<T> out = tape.value(x);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = scale * (out[i] - shift);
    return tape.emplace(std::move(out), tape.requires_grad(x), [=](Tape<T>& t, std::size_t self) {
        const auto& g = t.grad_of(self);
        auto& gx = t.grad_mut(x.id);
        for (std::size_t i = 0; i < g.size(); ++i) gx[i] += scale * g[i];
    });
}

/// Scalar Σ weights[i]·x[i]; projects any output to a scalar objective.
template <class T>
Var weighted_sum(Tape<T>& tape, Var x, const BasicTensor<T>& weights) {
    const auto& xv = tape.value(x);
    if (xv.size() != weights.size()) {
        throw DimensionError("weighted_sum: " + shape_string(xv.shape()) + " vs weights " +
                             shape_string(weights.shape()));
    }
    T s{0};
    for (std::size_t i = 0; i < xv.size(); ++i) s += weights[i] * xv[i];
    return tape.emplace(BasicTensor<T>({1}, std::vector<T>{s}), tape.requires_grad(x),
                        [=](Tape<T>& t, std::size_t self) {
                            const T g = t.grad_of(self)[0];
                            auto& gx = t.grad_mut(x.id);
                            for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += g * weights[i];
                        });
}

}  // namespace attnfuse::ops
