#include "spgnn/optim.hpp"

namespace spgnn {

SgdMomentum::SgdMomentum(std::vector<Parameter*> params, double lr, double momentum,
                         double weight_decay)
    : params_(std::move(params)), lr_(lr), momentum_(momentum), weight_decay_(weight_decay) {
    velocity_.reserve(params_.size());
    for (Parameter* p : params_) velocity_.push_back(Tensor::zeros_like(p->value));
}

void SgdMomentum::step() {
    for (size_t i = 0; i < params_.size(); ++i) {
        Parameter& p = *params_[i];
        Tensor& v = velocity_[i];
        for (std::int64_t t = 0; t < p.numel(); ++t) {
            v[t] = momentum_ * v[t] + (p.grad[t] + weight_decay_ * p.value[t]);
            p.value[t] -= lr_ * v[t];
        }
    }
}

}  // namespace spgnn
