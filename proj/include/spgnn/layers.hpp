#pragma once

#include <string>
#include <vector>

#include "spgnn/autograd.hpp"
#include "spgnn/ops.hpp"
#include "spgnn/rng.hpp"
#include "spgnn/tensor.hpp"

namespace spgnn {

/// Kaiming-uniform fan-in init: U(-sqrt(6/fan_in), sqrt(6/fan_in)).
void kaiming_uniform(Tensor& w, int fan_in, Rng& rng);

/// Multiplies every entry in place (init-time damping of residual branches
/// and prediction layers).
void scale_values(Tensor& w, double factor);

struct Conv2d {
    Parameter w;  // [co, ci, k, k]
    Parameter b;  // [co], present iff has_bias
    bool has_bias;
    int stride;
    int pad;

    Conv2d(const std::string& name, int ci, int co, int k, int stride, int pad,
           bool bias = true);
    void init(Rng& rng);
    Var forward(Graph& g, Var x);
    void collect(std::vector<Parameter*>& out);
};

struct Linear {
    Parameter w;  // [din, dout]
    Parameter b;  // [dout], present iff has_bias
    bool has_bias;

    Linear(const std::string& name, int din, int dout, bool bias = true);
    void init(Rng& rng);
    Var forward(Graph& g, Var x);
    void collect(std::vector<Parameter*>& out);
};

}  // namespace spgnn
