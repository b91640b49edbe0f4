#pragma once

#include <string>
#include <vector>

#include "spgnn/layers.hpp"
#include "spgnn/tensor.hpp"

namespace spgnn {

/// K-nearest-neighbor table over node features: row i holds node i
/// itself followed by its K-1 nearest other nodes by Euclidean feature
/// distance, ties broken by lower index.
struct NeighborTable {
    std::vector<int> idx;  // n*k row-major
    int n = 0;
    int k = 0;
};

/// Builds the table from [N,D] features. Requires 1 <= k <= N.
NeighborTable knn_graph(const Tensor& feats, int k);

/// Two stride-2 3x3 convolutions with GeLU between, taking a [3,H,W]
/// image (H, W divisible by 32) to [out_dim, H/4, W/4].
struct Stem {
    Conv2d conv1;
    Conv2d conv2;

    Stem(const std::string& name, int in_channels, int out_dim);
    void init(Rng& rng);
    Var forward(Graph& g, Var img);
    void collect(std::vector<Parameter*>& out);
};

}  // namespace spgnn
