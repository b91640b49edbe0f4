#include "spgnn/patch_graph.hpp"

#include <stdexcept>

#include "spgnn/kernels.hpp"

namespace spgnn {

NeighborTable knn_graph(const Tensor& feats, int k) {
    if (feats.rank() != 2) throw std::invalid_argument("knn_graph: features must be [N,D]");
    int n = feats.dim(0), d = feats.dim(1);
    if (k < 1 || k > n) throw std::invalid_argument("knn_graph: K must be in [1, N]");
    NeighborTable nt;
    nt.n = n;
    nt.k = k;
    nt.idx.resize(static_cast<size_t>(n) * k);
    kernels::knn_select(feats.data(), n, d, k, nt.idx.data());
    return nt;
}

Stem::Stem(const std::string& name, int in_channels, int out_dim)
    : conv1(name + ".conv1", in_channels, out_dim, 3, 2, 1),
      conv2(name + ".conv2", out_dim, out_dim, 3, 2, 1) {}

void Stem::init(Rng& rng) {
    conv1.init(rng);
    conv2.init(rng);
}

Var Stem::forward(Graph& g, Var img) {
    const Tensor& v = img.value();
    if (v.rank() != 3) throw std::invalid_argument("stem: input must be [C,H,W]");
    if (v.dim(1) % 32 != 0 || v.dim(2) % 32 != 0)
        throw std::invalid_argument("stem: input extents must be divisible by 32, got " +
                                    v.shape_str());
    return conv2.forward(g, ops::gelu(conv1.forward(g, img)));
}

void Stem::collect(std::vector<Parameter*>& out) {
    conv1.collect(out);
    conv2.collect(out);
}

}  // namespace spgnn
