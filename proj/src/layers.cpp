#include "spgnn/layers.hpp"

#include <cmath>

namespace spgnn {

void kaiming_uniform(Tensor& w, int fan_in, Rng& rng) {
    double bound = std::sqrt(6.0 / fan_in);
    for (std::int64_t i = 0; i < w.numel(); ++i) w[i] = rng.uniform(-bound, bound);
}

void scale_values(Tensor& w, double factor) {
    for (std::int64_t i = 0; i < w.numel(); ++i) w[i] *= factor;
}

Conv2d::Conv2d(const std::string& name, int ci, int co, int k, int stride_, int pad_,
               bool bias)
    : w(name + ".w", {co, ci, k, k}),
      b(bias ? Parameter(name + ".b", {co}) : Parameter()),
      has_bias(bias),
      stride(stride_),
      pad(pad_) {}

void Conv2d::init(Rng& rng) {
    kaiming_uniform(w.value, w.value.dim(1) * w.value.dim(2) * w.value.dim(3), rng);
    // bias stays zero
}

Var Conv2d::forward(Graph& g, Var x) {
    Var bias = has_bias ? g.param(b) : Var{};
    return ops::conv2d(x, g.param(w), bias, stride, pad);
}

void Conv2d::collect(std::vector<Parameter*>& out) {
    out.push_back(&w);
    if (has_bias) out.push_back(&b);
}

Linear::Linear(const std::string& name, int din, int dout, bool bias)
    : w(name + ".w", {din, dout}),
      b(bias ? Parameter(name + ".b", {dout}) : Parameter()),
      has_bias(bias) {}

void Linear::init(Rng& rng) {
    kaiming_uniform(w.value, w.value.dim(0), rng);
}

Var Linear::forward(Graph& g, Var x) {
    Var bias = has_bias ? g.param(b) : Var{};
    return ops::linear(x, g.param(w), bias);
}

void Linear::collect(std::vector<Parameter*>& out) {
    out.push_back(&w);
    if (has_bias) out.push_back(&b);
}

}  // namespace spgnn
