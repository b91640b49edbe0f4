#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace spgnn {

/// Dense row-major tensor of doubles. The carrier type for features,
/// weights and gradients throughout the library.
class Tensor {
public:
    Tensor() = default;
    explicit Tensor(std::vector<int> shape);
    Tensor(std::vector<int> shape, std::vector<double> data);

    static Tensor scalar(double v);
    static Tensor zeros_like(const Tensor& t) { return Tensor(t.shape_); }

    const std::vector<int>& shape() const { return shape_; }
    int rank() const { return static_cast<int>(shape_.size()); }
    int dim(int i) const { return shape_[static_cast<size_t>(i)]; }
    std::int64_t numel() const { return static_cast<std::int64_t>(data_.size()); }
    bool empty() const { return data_.empty(); }

    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }
    double& operator[](std::int64_t i) { return data_[static_cast<size_t>(i)]; }
    double operator[](std::int64_t i) const { return data_[static_cast<size_t>(i)]; }

    // Indexed access for the common ranks.
    double& at(int i, int j) { return data_[static_cast<size_t>(i) * dim(1) + j]; }
    double at(int i, int j) const { return data_[static_cast<size_t>(i) * dim(1) + j]; }
    double& at(int c, int y, int x) {
        return data_[(static_cast<size_t>(c) * dim(1) + y) * dim(2) + x];
    }
    double at(int c, int y, int x) const {
        return data_[(static_cast<size_t>(c) * dim(1) + y) * dim(2) + x];
    }

    bool same_shape(const Tensor& o) const { return shape_ == o.shape_; }
    bool all_finite() const;

    void fill(double v);
    void zero() { fill(0.0); }
    /// this += s * other (shapes must match).
    void add_scaled(const Tensor& other, double s);
    double item() const;  // requires numel() == 1
    double abs_max() const;

    std::string shape_str() const;

private:
    std::vector<int> shape_;
    std::vector<double> data_;
};

/// A learnable weight: value plus an accumulated gradient of the same shape.
struct Parameter {
    Tensor value;
    Tensor grad;
    std::string name;

    Parameter() = default;
    Parameter(std::string name_, std::vector<int> shape)
        : value(shape), grad(std::move(shape)), name(std::move(name_)) {}

    std::int64_t numel() const { return value.numel(); }
};

void zero_grads(const std::vector<Parameter*>& params);

}  // namespace spgnn
