#include "spgnn/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace spgnn {

namespace {

std::int64_t checked_numel(const std::vector<int>& shape) {
    std::int64_t n = 1;
    for (int d : shape) {
        if (d <= 0) throw std::invalid_argument("Tensor: non-positive extent");
        n *= d;
    }
    return n;
}

}  // namespace

Tensor::Tensor(std::vector<int> shape)
    : shape_(std::move(shape)), data_(static_cast<size_t>(checked_numel(shape_)), 0.0) {}

Tensor::Tensor(std::vector<int> shape, std::vector<double> data) : shape_(std::move(shape)) {
    if (checked_numel(shape_) != static_cast<std::int64_t>(data.size()))
        throw std::invalid_argument("Tensor: data length does not match shape");
    data_ = std::move(data);
}

Tensor Tensor::scalar(double v) { return Tensor({1}, {v}); }

bool Tensor::all_finite() const {
    return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

void Tensor::fill(double v) { std::fill(data_.begin(), data_.end(), v); }

void Tensor::add_scaled(const Tensor& other, double s) {
    if (!same_shape(other)) throw std::invalid_argument("Tensor::add_scaled: shape mismatch");
    for (size_t i = 0; i < data_.size(); ++i) data_[i] += s * other.data_[i];
}

double Tensor::item() const {
    if (numel() != 1) throw std::invalid_argument("Tensor::item: not a scalar");
    return data_[0];
}

double Tensor::abs_max() const {
    double m = 0.0;
    for (double v : data_) m = std::max(m, std::abs(v));
    return m;
}

std::string Tensor::shape_str() const {
    std::string s = "[";
    for (size_t i = 0; i < shape_.size(); ++i) {
        if (i) s += "x";
        s += std::to_string(shape_[i]);
    }
    return s + "]";
}

void zero_grads(const std::vector<Parameter*>& params) {
    for (Parameter* p : params) p->grad.zero();
}

}  // namespace spgnn
