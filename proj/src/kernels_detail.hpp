// Per-output-element kernel bodies shared by the serial and OpenMP
// drivers. Each helper computes one disjoint slice of the output with a
// fixed accumulation order, so both drivers produce bit-identical
// results regardless of thread count.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <vector>

namespace spgnn::kernels::detail {

inline void matmul_nn_row(const double* a, const double* b, double* c, int i,
                          int k, int n, bool accumulate) {
    double* ci = c + static_cast<std::int64_t>(i) * n;
    if (!accumulate) std::fill(ci, ci + n, 0.0);
    for (int t = 0; t < k; ++t) {
        double av = a[static_cast<std::int64_t>(i) * k + t];
        const double* bt = b + static_cast<std::int64_t>(t) * n;
        for (int j = 0; j < n; ++j) ci[j] += av * bt[j];
    }
}

inline void matmul_nt_row(const double* a, const double* b, double* c, int i,
                          int k, int n, bool accumulate) {
    const double* ai = a + static_cast<std::int64_t>(i) * k;
    for (int j = 0; j < n; ++j) {
        const double* bj = b + static_cast<std::int64_t>(j) * k;
        double acc = 0.0;
        for (int t = 0; t < k; ++t) acc += ai[t] * bj[t];
        double* cij = c + static_cast<std::int64_t>(i) * n + j;
        *cij = accumulate ? *cij + acc : acc;
    }
}

inline void matmul_tn_row(const double* a, const double* b, double* c, int i,
                          int m, int k, int n, bool accumulate) {
    double* ci = c + static_cast<std::int64_t>(i) * n;
    if (!accumulate) std::fill(ci, ci + n, 0.0);
    for (int t = 0; t < k; ++t) {
        double av = a[static_cast<std::int64_t>(t) * m + i];
        const double* bt = b + static_cast<std::int64_t>(t) * n;
        for (int j = 0; j < n; ++j) ci[j] += av * bt[j];
    }
}

inline int conv_out_extent(int in, int k, int stride, int pad) {
    return (in + 2 * pad - k) / stride + 1;
}

// Output positions o in [lo, hi) are exactly those whose input index
// o*stride - pad + k_off lands inside [0, size_in).
inline void tap_range(int size_in, int size_out, int k_off, int stride, int pad, int& lo,
                      int& hi) {
    int a = pad - k_off;
    lo = a <= 0 ? 0 : (a + stride - 1) / stride;
    int b = size_in + pad - k_off;
    hi = b <= 0 ? 0 : std::min(size_out, (b - 1) / stride + 1);
    if (hi < lo) hi = lo;
}

// One output channel plane of the forward convolution. Tap sweep over
// precomputed valid rectangles; every output cell still accumulates its
// terms in (ic, ky, kx) order starting from the bias, so the result is
// bit-identical to the naive per-cell loop.
inline void conv2d_forward_plane(const double* x, const double* w, const double* bias,
                                 double* y, int oc, int ci, int h, int wd, int kh, int kw,
                                 int stride, int pad, int oh, int ow) {
    double* yp = y + static_cast<std::int64_t>(oc) * oh * ow;
    double init = bias ? bias[oc] : 0.0;
    for (std::int64_t i = 0; i < static_cast<std::int64_t>(oh) * ow; ++i) yp[i] = init;
    for (int icn = 0; icn < ci; ++icn) {
        const double* xp = x + static_cast<std::int64_t>(icn) * h * wd;
        for (int ky = 0; ky < kh; ++ky) {
            int oy_lo, oy_hi;
            tap_range(h, oh, ky, stride, pad, oy_lo, oy_hi);
            for (int kx = 0; kx < kw; ++kx) {
                int ox_lo, ox_hi;
                tap_range(wd, ow, kx, stride, pad, ox_lo, ox_hi);
                double wv = w[((static_cast<std::int64_t>(oc) * ci + icn) * kh + ky) * kw + kx];
                for (int oy = oy_lo; oy < oy_hi; ++oy) {
                    const double* xrow = xp + static_cast<std::int64_t>(oy * stride - pad + ky) * wd;
                    double* yrow = yp + static_cast<std::int64_t>(oy) * ow;
                    if (stride == 1) {
                        const double* xs = xrow + (kx - pad);
                        for (int ox = ox_lo; ox < ox_hi; ++ox) yrow[ox] += wv * xs[ox];
                    } else {
                        for (int ox = ox_lo; ox < ox_hi; ++ox)
                            yrow[ox] += wv * xrow[ox * stride - pad + kx];
                    }
                }
            }
        }
    }
}

// One input channel plane of the gradient w.r.t. the convolution input.
// Each thread owns the whole gx plane of its input channel, so writes
// stay disjoint; per-cell accumulation order is (oc, ky, kx), matching
// the gather formulation on a zeroed accumulator.
inline void conv2d_backward_input_plane(const double* gy, const double* w, double* gx_acc,
                                        int icn, int ci, int h, int wd, int co, int kh, int kw,
                                        int stride, int pad, int oh, int ow) {
    double* gxp = gx_acc + static_cast<std::int64_t>(icn) * h * wd;
    for (int oc = 0; oc < co; ++oc) {
        const double* gyp = gy + static_cast<std::int64_t>(oc) * oh * ow;
        for (int ky = 0; ky < kh; ++ky) {
            int oy_lo, oy_hi;
            tap_range(h, oh, ky, stride, pad, oy_lo, oy_hi);
            for (int kx = 0; kx < kw; ++kx) {
                int ox_lo, ox_hi;
                tap_range(wd, ow, kx, stride, pad, ox_lo, ox_hi);
                double wv = w[((static_cast<std::int64_t>(oc) * ci + icn) * kh + ky) * kw + kx];
                for (int oy = oy_lo; oy < oy_hi; ++oy) {
                    double* gxrow = gxp + static_cast<std::int64_t>(oy * stride - pad + ky) * wd;
                    const double* gyrow = gyp + static_cast<std::int64_t>(oy) * ow;
                    if (stride == 1) {
                        double* gs = gxrow + (kx - pad);
                        for (int ox = ox_lo; ox < ox_hi; ++ox) gs[ox] += wv * gyrow[ox];
                    } else {
                        for (int ox = ox_lo; ox < ox_hi; ++ox)
                            gxrow[ox * stride - pad + kx] += wv * gyrow[ox];
                    }
                }
            }
        }
    }
}

// All weights of one output channel of the gradient w.r.t. the kernel.
inline void conv2d_backward_weight_plane(const double* gy, const double* x, double* gw_acc,
                                         int oc, int ci, int h, int wd, int kh, int kw,
                                         int stride, int pad, int oh, int ow) {
    const double* gyp = gy + static_cast<std::int64_t>(oc) * oh * ow;
    for (int icn = 0; icn < ci; ++icn) {
        const double* xp = x + static_cast<std::int64_t>(icn) * h * wd;
        for (int ky = 0; ky < kh; ++ky) {
            int oy_lo, oy_hi;
            tap_range(h, oh, ky, stride, pad, oy_lo, oy_hi);
            for (int kx = 0; kx < kw; ++kx) {
                int ox_lo, ox_hi;
                tap_range(wd, ow, kx, stride, pad, ox_lo, ox_hi);
                double acc = 0.0;
                for (int oy = oy_lo; oy < oy_hi; ++oy) {
                    const double* xrow = xp + static_cast<std::int64_t>(oy * stride - pad + ky) * wd;
                    const double* gyrow = gyp + static_cast<std::int64_t>(oy) * ow;
                    if (stride == 1) {
                        const double* xs = xrow + (kx - pad);
                        for (int ox = ox_lo; ox < ox_hi; ++ox) acc += gyrow[ox] * xs[ox];
                    } else {
                        for (int ox = ox_lo; ox < ox_hi; ++ox)
                            acc += gyrow[ox] * xrow[ox * stride - pad + kx];
                    }
                }
                gw_acc[((static_cast<std::int64_t>(oc) * ci + icn) * kh + ky) * kw + kx] += acc;
            }
        }
    }
}

inline void conv2d_backward_bias_one(const double* gy, double* gb_acc, int oc, int oh, int ow) {
    double acc = 0.0;
    const double* p = gy + static_cast<std::int64_t>(oc) * oh * ow;
    for (std::int64_t i = 0; i < static_cast<std::int64_t>(oh) * ow; ++i) acc += p[i];
    gb_acc[oc] += acc;
}

inline double gelu_value(double v) {
    return 0.5 * v * (1.0 + std::erf(v * std::numbers::sqrt2 * 0.5));
}

inline double gelu_derivative(double v) {
    constexpr double inv_sqrt_2pi = 0.3989422804014327;
    double cdf = 0.5 * (1.0 + std::erf(v * std::numbers::sqrt2 * 0.5));
    double pdf = inv_sqrt_2pi * std::exp(-0.5 * v * v);
    return cdf + v * pdf;
}

// Fills one k-NN row: self first, then the k-1 nearest other nodes
// ordered by (squared distance, index). An ascending-j scan with strict
// '<' displacement makes the lower index win every distance tie.
inline void knn_row(const double* feats, int n, int d, int k, int i, int* row) {
    row[0] = i;
    int kept = 0;
    const int want = k - 1;
    double stack_d[64];
    int stack_i[64];
    std::vector<double> heap_d;
    std::vector<int> heap_i;
    double* bd = stack_d;
    int* bi = stack_i;
    if (want > 64) {
        heap_d.resize(static_cast<size_t>(want));
        heap_i.resize(static_cast<size_t>(want));
        bd = heap_d.data();
        bi = heap_i.data();
    }
    const double* fi = feats + static_cast<std::int64_t>(i) * d;
    for (int j = 0; j < n; ++j) {
        if (j == i) continue;
        const double* fj = feats + static_cast<std::int64_t>(j) * d;
        double d2 = 0.0;
        for (int t = 0; t < d; ++t) {
            double diff = fi[t] - fj[t];
            d2 += diff * diff;
        }
        if (kept == want && d2 >= bd[kept - 1]) continue;
        int pos = kept < want ? kept : want - 1;
        while (pos > 0 && d2 < bd[pos - 1]) {
            bd[pos] = bd[pos - 1];
            bi[pos] = bi[pos - 1];
            --pos;
        }
        bd[pos] = d2;
        bi[pos] = j;
        if (kept < want) ++kept;
    }
    for (int t = 0; t < kept; ++t) row[1 + t] = bi[t];
}

// max_j (x_i - x_j) over the neighbor set equals x_i - min_j x_j; the
// argmin index is recorded per channel for the backward pass. Ties keep
// the earliest neighbor-row entry (strict '<').
inline void max_relative_row(const double* x, const int* neighbors, int i, int d, int k,
                             double* y, int* argmin_out) {
    const int* nbr = neighbors + static_cast<std::int64_t>(i) * k;
    for (int c = 0; c < d; ++c) {
        double mn = x[static_cast<std::int64_t>(nbr[0]) * d + c];
        int arg = nbr[0];
        for (int t = 1; t < k; ++t) {
            double v = x[static_cast<std::int64_t>(nbr[t]) * d + c];
            if (v < mn) {
                mn = v;
                arg = nbr[t];
            }
        }
        y[static_cast<std::int64_t>(i) * d + c] = x[static_cast<std::int64_t>(i) * d + c] - mn;
        argmin_out[static_cast<std::int64_t>(i) * d + c] = arg;
    }
}

inline void unpool_forward_channel(const double* nodes, const int* labels, double* out,
                                   int c, int d, std::int64_t npix) {
    double* oc = out + c * npix;
    for (std::int64_t p = 0; p < npix; ++p)
        oc[p] = nodes[static_cast<std::int64_t>(labels[p]) * d + c];
}

inline void unpool_backward_channel(const double* gy, const int* labels, double* gnodes_acc,
                                    int c, int d, std::int64_t npix) {
    const double* gc = gy + c * npix;
    for (std::int64_t p = 0; p < npix; ++p)
        gnodes_acc[static_cast<std::int64_t>(labels[p]) * d + c] += gc[p];
}

}  // namespace spgnn::kernels::detail
