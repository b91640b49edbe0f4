#pragma once

#include <cstdint>

namespace spgnn::kernels {

// Data-parallel inner loops used by the tensor ops. Each OpenMP variant
// partitions disjoint output elements across threads and keeps the
// per-element accumulation order of the serial reference in
// kernels::serial, so results are bit-identical to the serial versions
// and independent of the thread count. The *_acc kernels accumulate
// into their output instead of overwriting it.

// C[m x n] = A[m x k] * B[k x n] (or += when accumulate).
void matmul_nn(const double* a, const double* b, double* c, int m, int k, int n,
               bool accumulate = false);
// C[m x n] = A[m x k] * B[n x k]^T.
void matmul_nt(const double* a, const double* b, double* c, int m, int k, int n,
               bool accumulate = false);
// C[m x n] = A[k x m]^T * B[k x n].
void matmul_tn(const double* a, const double* b, double* c, int m, int k, int n,
               bool accumulate = false);

// Cross-correlation conv2d. x: [ci x h x w], w: [co x ci x kh x kw],
// y: [co x oh x ow]; bias may be null.
void conv2d_forward(const double* x, const double* w, const double* bias, double* y,
                    int ci, int h, int wd, int co, int kh, int kw, int stride, int pad);
void conv2d_backward_input(const double* gy, const double* w, double* gx_acc,
                           int ci, int h, int wd, int co, int kh, int kw, int stride, int pad);
void conv2d_backward_weight(const double* gy, const double* x, double* gw_acc,
                            int ci, int h, int wd, int co, int kh, int kw, int stride, int pad);
void conv2d_backward_bias(const double* gy, double* gb_acc, int co, int oh, int ow);

int conv2d_out_extent(int in, int k, int stride, int pad);

// Exact GeLU, x * Phi(x) with Phi the standard normal CDF.
void gelu_forward(const double* x, double* y, std::int64_t n);
void gelu_backward(const double* x, const double* gy, double* gx_acc, std::int64_t n);

// Neighbor table rows: [self, then k-1 nearest others by squared
// Euclidean feature distance, ties broken by ascending index].
// feats: [n x d], out: [n x k].
void knn_select(const double* feats, int n, int d, int k, int* out);

// Per node i and component c: max over listed neighbors j of
// x[i][c] - x[j][c]. argmin_out records the chosen j for the adjoint.
void max_relative_forward(const double* x, const int* neighbors, int n, int d, int k,
                          double* y, int* argmin_out);

// Broadcast node rows over their superpixel masks. nodes: [m x d],
// labels: [h*w] with values in [0, m), out: [d x h x w].
void unpool_forward(const double* nodes, const int* labels, double* out,
                    int m, int d, int h, int w);
void unpool_backward(const double* gy, const int* labels, double* gnodes_acc,
                     int m, int d, int h, int w);

namespace serial {

void matmul_nn(const double* a, const double* b, double* c, int m, int k, int n,
               bool accumulate = false);
void matmul_nt(const double* a, const double* b, double* c, int m, int k, int n,
               bool accumulate = false);
void matmul_tn(const double* a, const double* b, double* c, int m, int k, int n,
               bool accumulate = false);
void conv2d_forward(const double* x, const double* w, const double* bias, double* y,
                    int ci, int h, int wd, int co, int kh, int kw, int stride, int pad);
void conv2d_backward_input(const double* gy, const double* w, double* gx_acc,
                           int ci, int h, int wd, int co, int kh, int kw, int stride, int pad);
void conv2d_backward_weight(const double* gy, const double* x, double* gw_acc,
                            int ci, int h, int wd, int co, int kh, int kw, int stride, int pad);
void conv2d_backward_bias(const double* gy, double* gb_acc, int co, int oh, int ow);
void gelu_forward(const double* x, double* y, std::int64_t n);
void gelu_backward(const double* x, const double* gy, double* gx_acc, std::int64_t n);
void knn_select(const double* feats, int n, int d, int k, int* out);
void max_relative_forward(const double* x, const int* neighbors, int n, int d, int k,
                          double* y, int* argmin_out);
void unpool_forward(const double* nodes, const int* labels, double* out,
                    int m, int d, int h, int w);
void unpool_backward(const double* gy, const int* labels, double* gnodes_acc,
                     int m, int d, int h, int w);

}  // namespace serial

}  // namespace spgnn::kernels
