#include "spgnn/autograd.hpp"

#include <stdexcept>

namespace spgnn {

const Tensor& Var::value() const { return graph->value(*this); }
const Tensor& Var::grad() const { return graph->grad(*this); }

Graph::NodeRec& Graph::rec(Var v) {
    if (v.graph != this) throw std::logic_error("Var belongs to a different graph");
    return nodes_[static_cast<size_t>(v.index)];
}

const Graph::NodeRec& Graph::rec(Var v) const {
    if (v.graph != this) throw std::logic_error("Var belongs to a different graph");
    return nodes_[static_cast<size_t>(v.index)];
}

Var Graph::constant(Tensor value) {
    NodeRec r;
    r.value = std::move(value);
    nodes_.push_back(std::move(r));
    return {this, static_cast<int>(nodes_.size()) - 1};
}

Var Graph::leaf(Tensor value) {
    NodeRec r;
    r.value = std::move(value);
    r.needs_grad = true;
    nodes_.push_back(std::move(r));
    return {this, static_cast<int>(nodes_.size()) - 1};
}

Var Graph::param(Parameter& p) {
    auto it = param_nodes_.find(&p);
    if (it != param_nodes_.end()) return {this, it->second};
    NodeRec r;
    r.value = p.value;
    r.needs_grad = true;
    r.param = &p;
    nodes_.push_back(std::move(r));
    int idx = static_cast<int>(nodes_.size()) - 1;
    param_nodes_.emplace(&p, idx);
    return {this, idx};
}

Var Graph::node(Tensor value, const std::vector<Var>& inputs, BackwardFn fn) {
    NodeRec r;
    r.value = std::move(value);
    for (const Var& in : inputs) {
        if (in.graph != this) throw std::logic_error("input Var belongs to a different graph");
        if (rec(in).needs_grad) r.needs_grad = true;
    }
    if (r.needs_grad) r.fn = std::move(fn);
    nodes_.push_back(std::move(r));
    return {this, static_cast<int>(nodes_.size()) - 1};
}

const Tensor& Graph::value(Var v) const { return rec(v).value; }

const Tensor& Graph::grad(Var v) {
    NodeRec& r = rec(v);
    if (r.grad.empty()) r.grad = Tensor::zeros_like(r.value);
    return r.grad;
}

bool Graph::needs_grad(Var v) const { return rec(v).needs_grad; }

void Graph::accumulate(Var v, const Tensor& gy, double scale) {
    NodeRec& r = rec(v);
    if (!r.needs_grad) return;
    if (!gy.same_shape(r.value))
        throw std::logic_error("adjoint shape " + gy.shape_str() + " does not match value " +
                               r.value.shape_str());
    if (r.grad.empty()) r.grad = Tensor::zeros_like(r.value);
    r.grad.add_scaled(gy, scale);
}

void Graph::backward(Var loss) {
    NodeRec& top = rec(loss);
    if (top.value.numel() != 1) throw std::invalid_argument("backward target must be scalar");
    if (!top.needs_grad) return;
    for (NodeRec& r : nodes_) r.grad = Tensor();
    accumulate(loss, Tensor::scalar(1.0));
    for (int i = loss.index; i >= 0; --i) {
        NodeRec& r = nodes_[static_cast<size_t>(i)];
        if (!r.needs_grad || r.grad.empty() || !r.fn) continue;
        r.fn(r.grad);
    }
    for (auto& [p, idx] : param_nodes_) {
        NodeRec& r = nodes_[static_cast<size_t>(idx)];
        if (!r.grad.empty()) p->grad.add_scaled(r.grad, 1.0);
    }
}

}  // namespace spgnn
