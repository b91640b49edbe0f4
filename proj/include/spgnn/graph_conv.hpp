#pragma once

#include <string>
#include <vector>

#include "spgnn/autograd.hpp"
#include "spgnn/patch_graph.hpp"
#include "spgnn/rng.hpp"
#include "spgnn/tensor.hpp"

namespace spgnn {

/// Multi-head max-relative graph convolution: aggregate
/// phi_i = max_j in K(i) (x_i - x_j) channelwise, split phi into head
/// column blocks, project each with its own weight, concatenate.
struct GraphConv {
    Parameter w_psi;  // [heads, d_in/heads, d_out/heads]
    int heads;

    GraphConv(const std::string& name, int d_in, int d_out, int heads);
    void init(Rng& rng);
    Var forward(Graph& g, Var x, const NeighborTable& nt);
    void collect(std::vector<Parameter*>& out);
};

/// Residual graph-conv block followed by a residual FFN:
///   Y = gelu(GraphConv(X * W_in)) * W_out + X
///   Z = gelu(Y * Wf_in) * Wf_out + Y      (FFN hidden = 4*D)
/// No biases and no normalization layers. The neighbor table is built
/// from the block's input features by the caller.
struct GcnBlock {
    Parameter w_in;    // [d, d]
    Parameter w_out;   // [d, d]
    GraphConv conv;    // heads, [heads, d/h, d/h]
    Parameter wf_in;   // [d, 4d]
    Parameter wf_out;  // [4d, d]
    int dim;

    GcnBlock(const std::string& name, int dim, int heads);
    void init(Rng& rng);
    Var forward(Graph& g, Var x, const NeighborTable& nt);
    void collect(std::vector<Parameter*>& out);
};

}  // namespace spgnn
