#pragma once

#include <vector>

#include "spgnn/autograd.hpp"

namespace spgnn::ops {

// ---- elementwise and linear algebra ----
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var scale(Var a, double s);
Var sum(Var a);
Var mean(Var a);
Var gelu(Var a);
/// [m,k] x [k,n] -> [m,n]
Var matmul(Var a, Var b);
/// x [n,din] * w [din,dout] + row-broadcast bias [dout]; pass a
/// default-constructed Var to omit the bias.
Var linear(Var x, Var w, Var bias);
/// Splits x [N, heads*di] into head column blocks, multiplies block m
/// by w[m] ([heads, di, do]), concatenates to [N, heads*do].
Var multi_head_matmul(Var x, Var w);
/// x [C,H,W], w [Co,C,kh,kw], optional bias [Co]; cross-correlation.
Var conv2d(Var x, Var w, Var bias, int stride, int pad);

// ---- layout ----
Var reshape(Var a, std::vector<int> shape);
Var concat_rows(const std::vector<Var>& parts);
/// [c1,H,W] ++ [c2,H,W] -> [c1+c2,H,W]
Var concat_channels(Var a, Var b);
/// Rows (or slices along axis 0) selected by index; duplicates allowed.
Var gather_axis0(Var a, std::vector<int> idx);
/// [C,H,W] -> [C,2H,2W] nearest-neighbor.
Var upsample2_nearest(Var a);
/// [C,Hg,Wg] -> [Hg*Wg, C] (row-major node order) and its inverse.
Var grid_to_nodes(Var map);
Var nodes_to_grid(Var nodes, int h, int w);
/// [4A,H,W] with channel layout (anchor*4+coord) -> [A*H*W, 4] rows in
/// (anchor, y, x) order, matching the flattened logit order.
Var anchor_deltas_to_rows(Var deltas, int num_anchors);

// ---- graph ----
/// x [N,D]; neighbors N*k row-major with self first per row. Per
/// channel: x_i - min over the neighbor list (== max_j of x_i - x_j).
Var max_relative(Var x, const std::vector<int>& neighbors, int k);
/// nodes [M,D], labels H*W in [0,M) -> [D,H,W] by label lookup.
Var unpool(Var nodes, const std::vector<int>& labels, int h, int w);

// ---- losses (scalar outputs) ----
/// Mean negative log softmax probability, max-stabilized.
Var softmax_cross_entropy(Var logits, const std::vector<int>& targets);
/// Mean binary cross-entropy with logits; targets in {0,1}, same numel.
Var sigmoid_bce_mean(Var logits, const Tensor& targets);
/// Mean over elements of: 0.5 d^2/beta if |d| < beta else |d| - 0.5 beta.
Var smooth_l1(Var pred, const Tensor& target, double beta);

// ---- value-only helpers (no graph recording) ----
double sigmoid(double x);
/// Row-wise softmax of a [n,c] tensor, max-stabilized.
Tensor softmax_rows(const Tensor& logits);

}  // namespace spgnn::ops
