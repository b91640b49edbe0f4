#pragma once

#include <functional>
#include <unordered_map>
#include <vector>

#include "spgnn/tensor.hpp"

namespace spgnn {

class Graph;

/// Handle to a value recorded on a Graph.
struct Var {
    Graph* graph = nullptr;
    int index = -1;

    bool defined() const { return graph != nullptr; }
    const Tensor& value() const;
    const Tensor& grad() const;
};

/// Reverse-mode tape. Forward values live in an arena together with an
/// adjoint closure per node; backward() seeds the loss with 1 and
/// replays the closures in reverse creation order. That order is fixed
/// by construction, so gradient accumulation is deterministic.
class Graph {
public:
    /// Receives d(loss)/d(node) and must push contributions into the
    /// node's inputs via Graph::accumulate.
    using BackwardFn = std::function<void(const Tensor& gy)>;

    Graph() = default;
    Graph(const Graph&) = delete;
    Graph& operator=(const Graph&) = delete;

    /// Non-differentiable leaf (data, targets, fixed adjacency...).
    Var constant(Tensor value);
    /// Differentiable leaf not tied to a Parameter (used by tests).
    Var leaf(Tensor value);
    /// Leaf bound to a Parameter. Cached: repeated calls with the same
    /// Parameter return the same node, so shared weights accumulate
    /// into one gradient. backward() flushes it into Parameter::grad.
    Var param(Parameter& p);
    /// Interior node. `fn` may be empty when no input needs gradients.
    Var node(Tensor value, const std::vector<Var>& inputs, BackwardFn fn);

    const Tensor& value(Var v) const;
    /// Adjoint accumulated by the most recent backward(); all-zeros
    /// tensor if nothing reached v.
    const Tensor& grad(Var v);
    bool needs_grad(Var v) const;
    /// grad(v) += scale * gy. No-op when v does not need gradients.
    void accumulate(Var v, const Tensor& gy, double scale = 1.0);
    /// Runs a reverse sweep from a scalar loss (node adjoints are reset
    /// first), then adds each Parameter node's adjoint into
    /// Parameter::grad — so repeated calls accumulate there.
    void backward(Var loss);
    std::size_t size() const { return nodes_.size(); }

private:
    struct NodeRec {
        Tensor value;
        Tensor grad;  // allocated on first accumulate
        bool needs_grad = false;
        BackwardFn fn;
        Parameter* param = nullptr;
    };

    NodeRec& rec(Var v);
    const NodeRec& rec(Var v) const;

    std::vector<NodeRec> nodes_;
    std::unordered_map<Parameter*, int> param_nodes_;
};

}  // namespace spgnn
