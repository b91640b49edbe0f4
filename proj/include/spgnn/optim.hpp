#pragma once

#include <vector>

#include "spgnn/tensor.hpp"

namespace spgnn {

/// SGD with momentum and decoupled-from-nothing L2 weight decay:
///   v <- momentum*v + (grad + weight_decay*value)
///   value <- value - lr*v
class SgdMomentum {
public:
    SgdMomentum(std::vector<Parameter*> params, double lr, double momentum,
                double weight_decay);

    void step();
    void set_lr(double lr) { lr_ = lr; }
    double lr() const { return lr_; }

private:
    std::vector<Parameter*> params_;
    std::vector<Tensor> velocity_;
    double lr_;
    double momentum_;
    double weight_decay_;
};

}  // namespace spgnn
