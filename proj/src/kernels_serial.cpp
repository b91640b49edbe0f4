// Serial reference drivers. Each loops over the same disjoint output
// slices as the OpenMP drivers and calls the shared per-element bodies,
// so the two families agree bit-for-bit.

#include "spgnn/kernels.hpp"

#include "kernels_detail.hpp"

namespace spgnn::kernels {

int conv2d_out_extent(int in, int k, int stride, int pad) {
    return detail::conv_out_extent(in, k, stride, pad);
}

namespace serial {

void matmul_nn(const double* a, const double* b, double* c, int m, int k, int n,
               bool accumulate) {
    for (int i = 0; i < m; ++i) detail::matmul_nn_row(a, b, c, i, k, n, accumulate);
}

void matmul_nt(const double* a, const double* b, double* c, int m, int k, int n,
               bool accumulate) {
    for (int i = 0; i < m; ++i) detail::matmul_nt_row(a, b, c, i, k, n, accumulate);
}

void matmul_tn(const double* a, const double* b, double* c, int m, int k, int n,
               bool accumulate) {
    for (int i = 0; i < m; ++i) detail::matmul_tn_row(a, b, c, i, m, k, n, accumulate);
}

void conv2d_forward(const double* x, const double* w, const double* bias, double* y,
                    int ci, int h, int wd, int co, int kh, int kw, int stride, int pad) {
    int oh = detail::conv_out_extent(h, kh, stride, pad);
    int ow = detail::conv_out_extent(wd, kw, stride, pad);
    for (int oc = 0; oc < co; ++oc)
        detail::conv2d_forward_plane(x, w, bias, y, oc, ci, h, wd, kh, kw, stride, pad, oh, ow);
}

void conv2d_backward_input(const double* gy, const double* w, double* gx_acc,
                           int ci, int h, int wd, int co, int kh, int kw, int stride, int pad) {
    int oh = detail::conv_out_extent(h, kh, stride, pad);
    int ow = detail::conv_out_extent(wd, kw, stride, pad);
    for (int icn = 0; icn < ci; ++icn)
        detail::conv2d_backward_input_plane(gy, w, gx_acc, icn, ci, h, wd, co, kh, kw,
                                            stride, pad, oh, ow);
}

void conv2d_backward_weight(const double* gy, const double* x, double* gw_acc,
                            int ci, int h, int wd, int co, int kh, int kw, int stride, int pad) {
    int oh = detail::conv_out_extent(h, kh, stride, pad);
    int ow = detail::conv_out_extent(wd, kw, stride, pad);
    for (int oc = 0; oc < co; ++oc)
        detail::conv2d_backward_weight_plane(gy, x, gw_acc, oc, ci, h, wd, kh, kw,
                                             stride, pad, oh, ow);
}

void conv2d_backward_bias(const double* gy, double* gb_acc, int co, int oh, int ow) {
    for (int oc = 0; oc < co; ++oc) detail::conv2d_backward_bias_one(gy, gb_acc, oc, oh, ow);
}

void gelu_forward(const double* x, double* y, std::int64_t n) {
    for (std::int64_t i = 0; i < n; ++i) y[i] = detail::gelu_value(x[i]);
}

void gelu_backward(const double* x, const double* gy, double* gx_acc, std::int64_t n) {
    for (std::int64_t i = 0; i < n; ++i) gx_acc[i] += gy[i] * detail::gelu_derivative(x[i]);
}

void knn_select(const double* feats, int n, int d, int k, int* out) {
    for (int i = 0; i < n; ++i)
        detail::knn_row(feats, n, d, k, i, out + static_cast<std::int64_t>(i) * k);
}

void max_relative_forward(const double* x, const int* neighbors, int n, int d, int k,
                          double* y, int* argmin_out) {
    for (int i = 0; i < n; ++i)
        detail::max_relative_row(x, neighbors, i, d, k, y, argmin_out);
}

void unpool_forward(const double* nodes, const int* labels, double* out,
                    int m, int d, int h, int w) {
    (void)m;
    std::int64_t npix = static_cast<std::int64_t>(h) * w;
    for (int c = 0; c < d; ++c) detail::unpool_forward_channel(nodes, labels, out, c, d, npix);
}

void unpool_backward(const double* gy, const int* labels, double* gnodes_acc,
                     int m, int d, int h, int w) {
    (void)m;
    std::int64_t npix = static_cast<std::int64_t>(h) * w;
    for (int c = 0; c < d; ++c)
        detail::unpool_backward_channel(gy, labels, gnodes_acc, c, d, npix);
}

}  // namespace serial
}  // namespace spgnn::kernels
