#pragma once

#include <cstddef>
#include <numeric>
#include <vector>

#include "bitfusion/common.hpp"

// Golden functional oracle. Everything here is plain wide-integer arithmetic
// over dense tensors and never touches the 2-bit decomposition path, so it
// stays independent of the datapath it is used to check.

namespace bitfusion::ref {

struct Tensor {
    std::vector<std::size_t> shape;
    unsigned bits = 32;
    bool is_signed = true;
    std::vector<std::int64_t> values;

    static Tensor zeros(std::vector<std::size_t> shape, unsigned bits = 32,
                        bool is_signed = true) {
        Tensor t;
        t.shape = std::move(shape);
        t.bits = bits;
        t.is_signed = is_signed;
        t.values.assign(t.element_count(), 0);
        return t;
    }

    std::size_t element_count() const {
        std::size_t n = 1;
        for (std::size_t d : shape) n *= d;
        return n;
    }

    std::size_t dim(std::size_t i) const { return shape.at(i); }

    std::int64_t& at2(std::size_t i, std::size_t j) { return values[i * dim(1) + j]; }
    std::int64_t at2(std::size_t i, std::size_t j) const { return values[i * dim(1) + j]; }

    void check_ranges() const {
        for (std::int64_t v : values) {
            if (!fits(v, bits, is_signed)) {
                throw RangeError("tensor element out of range for its bitwidth");
            }
        }
    }
};

// C[M x N] = A[M x K] * B[K x N], products and sums wrapped to 32-bit
// two's complement to mirror the hardware partial sums.
inline Tensor gemm_ref(const Tensor& a, const Tensor& b) {
    if (a.shape.size() != 2 || b.shape.size() != 2 || a.dim(1) != b.dim(0)) {
        throw ConfigError("gemm_ref: shape mismatch");
    }
    const std::size_t m = a.dim(0), k = a.dim(1), n = b.dim(1);
    Tensor c = Tensor::zeros({m, n}, 32, true);
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            std::int32_t acc = 0;
            for (std::size_t kk = 0; kk < k; ++kk) {
                acc = add_wrap32(acc, a.at2(i, kk) * b.at2(kk, j));
            }
            c.at2(i, j) = acc;
        }
    }
    return c;
}

// 2-D convolution, valid padding. Input is [H][W][C], weights are
// [OC][KH][KW][C], output is [OH][OW][OC] with OH = (H-KH)/stride + 1.
inline Tensor conv_ref(const Tensor& x, const Tensor& w, std::size_t stride) {
    if (x.shape.size() != 3 || w.shape.size() != 4 || x.dim(2) != w.dim(3) || stride == 0) {
        throw ConfigError("conv_ref: shape mismatch");
    }
    const std::size_t h = x.dim(0), wd = x.dim(1), c = x.dim(2);
    const std::size_t oc = w.dim(0), kh = w.dim(1), kw = w.dim(2);
    if (kh > h || kw > wd) throw ConfigError("conv_ref: kernel larger than input");
    const std::size_t oh = (h - kh) / stride + 1;
    const std::size_t ow = (wd - kw) / stride + 1;
    Tensor out = Tensor::zeros({oh, ow, oc}, 32, true);
    for (std::size_t i = 0; i < oh; ++i) {
        for (std::size_t j = 0; j < ow; ++j) {
            for (std::size_t f = 0; f < oc; ++f) {
                std::int32_t acc = 0;
                for (std::size_t ki = 0; ki < kh; ++ki) {
                    for (std::size_t kj = 0; kj < kw; ++kj) {
                        for (std::size_t ch = 0; ch < c; ++ch) {
                            const std::int64_t xi =
                                x.values[((i * stride + ki) * wd + (j * stride + kj)) * c + ch];
                            const std::int64_t wi =
                                w.values[((f * kh + ki) * kw + kj) * c + ch];
                            acc = add_wrap32(acc, xi * wi);
                        }
                    }
                }
                out.values[(i * ow + j) * oc + f] = acc;
            }
        }
    }
    return out;
}

// Max pooling over [H][W][C] with a square window and stride == window.
inline Tensor pool_ref(const Tensor& x, std::size_t window) {
    if (x.shape.size() != 3 || window == 0 || x.dim(0) % window || x.dim(1) % window) {
        throw ConfigError("pool_ref: shape mismatch");
    }
    const std::size_t h = x.dim(0), w = x.dim(1), c = x.dim(2);
    const std::size_t oh = h / window, ow = w / window;
    Tensor out = Tensor::zeros({oh, ow, c}, x.bits, x.is_signed);
    for (std::size_t i = 0; i < oh; ++i) {
        for (std::size_t j = 0; j < ow; ++j) {
            for (std::size_t ch = 0; ch < c; ++ch) {
                std::int64_t best = min_value(64 - 1, true);
                for (std::size_t pi = 0; pi < window; ++pi) {
                    for (std::size_t pj = 0; pj < window; ++pj) {
                        const std::int64_t v =
                            x.values[((i * window + pi) * w + (j * window + pj)) * c + ch];
                        if (v > best) best = v;
                    }
                }
                out.values[(i * ow + j) * c + ch] = best;
            }
        }
    }
    return out;
}

// ReLU, elementwise.
inline Tensor act_ref(const Tensor& x) {
    Tensor out = x;
    for (auto& v : out.values) {
        if (v < 0) v = 0;
    }
    return out;
}

// Arithmetic right shift then saturation into `out_bits` (signed). Matches
// the column post-processing unit bit for bit.
inline Tensor requant_ref(const Tensor& x, unsigned shift, unsigned out_bits) {
    Tensor out = x;
    out.bits = out_bits;
    out.is_signed = true;
    for (auto& v : out.values) {
        v = shift_saturate(v, shift, out_bits);
    }
    return out;
}

// im2col expansion of a [H][W][C] input for a KHxKW kernel: one row per
// output position, one column per (kh, kw, c) tap. Used as the equivalence
// bridge between conv_ref and gemm_ref.
inline Tensor im2col(const Tensor& x, std::size_t kh, std::size_t kw, std::size_t stride) {
    const std::size_t h = x.dim(0), w = x.dim(1), c = x.dim(2);
    const std::size_t oh = (h - kh) / stride + 1;
    const std::size_t ow = (w - kw) / stride + 1;
    Tensor out = Tensor::zeros({oh * ow, kh * kw * c}, x.bits, x.is_signed);
    for (std::size_t i = 0; i < oh; ++i) {
        for (std::size_t j = 0; j < ow; ++j) {
            std::size_t col = 0;
            for (std::size_t ki = 0; ki < kh; ++ki) {
                for (std::size_t kj = 0; kj < kw; ++kj) {
                    for (std::size_t ch = 0; ch < c; ++ch) {
                        out.at2(i * ow + j, col++) =
                            x.values[((i * stride + ki) * w + (j * stride + kj)) * c + ch];
                    }
                }
            }
        }
    }
    return out;
}

} // namespace bitfusion::ref
