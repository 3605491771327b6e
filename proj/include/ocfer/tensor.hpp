#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace ocfer {

/// Extents of a dense tensor. Every extent is >= 1 and the list is non-empty.
using Shape = std::vector<std::size_t>;

std::size_t shape_size(const Shape& shape);
std::string shape_to_string(const Shape& shape);

/// Dense row-major tensor of doubles (last index fastest).
///
/// No broadcasting and no views: operations that combine tensors require
/// identical shapes and throw std::invalid_argument otherwise.
class Tensor {
public:
    Tensor();
    explicit Tensor(Shape shape, double value = 0.0);
    Tensor(Shape shape, std::vector<double> data);

    const Shape& shape() const noexcept { return shape_; }
    std::size_t rank() const noexcept { return shape_.size(); }
    std::size_t size() const noexcept { return data_.size(); }
    std::size_t extent(std::size_t axis) const { return shape_.at(axis); }

    std::span<double> data() noexcept { return data_; }
    std::span<const double> data() const noexcept { return data_; }
    std::vector<double>& storage() noexcept { return data_; }
    const std::vector<double>& storage() const noexcept { return data_; }

    double& operator[](std::size_t i) noexcept { return data_[i]; }
    double operator[](std::size_t i) const noexcept { return data_[i]; }

    // Multi-index access for the ranks the engine uses.
    double& at(std::size_t i, std::size_t j) { return data_[i * shape_[1] + j]; }
    double at(std::size_t i, std::size_t j) const { return data_[i * shape_[1] + j]; }
    double& at(std::size_t i, std::size_t j, std::size_t k) { return data_[(i * shape_[1] + j) * shape_[2] + k]; }
    double at(std::size_t i, std::size_t j, std::size_t k) const {
        return data_[(i * shape_[1] + j) * shape_[2] + k];
    }
    double& at(std::size_t i, std::size_t j, std::size_t k, std::size_t l) {
        return data_[((i * shape_[1] + j) * shape_[2] + k) * shape_[3] + l];
    }
    double at(std::size_t i, std::size_t j, std::size_t k, std::size_t l) const {
        return data_[((i * shape_[1] + j) * shape_[2] + k) * shape_[3] + l];
    }

    /// Same data, new shape; the element count must match.
    Tensor reshaped(Shape shape) const;

    void fill(double value);
    bool all_finite() const noexcept;

    friend bool operator==(const Tensor& a, const Tensor& b) = default;

private:
    Shape shape_;
    std::vector<double> data_;
};

Tensor tensor_filled(const Shape& shape, double value);

/// Sum of squared element differences, accumulated in flat index order.
double frobenius_sq_diff(const Tensor& a, const Tensor& b);

/// y + alpha * x
Tensor axpy(double alpha, const Tensor& x, const Tensor& y);

/// y += alpha * x, in place.
void axpy_inplace(double alpha, const Tensor& x, Tensor& y);

double max_abs_diff(const Tensor& a, const Tensor& b);

/// c[m x n] = a[m x k] * b[k x n], plain row-major buffers, c is overwritten.
void matmul(std::span<const double> a, std::span<const double> b, std::span<double> c, std::size_t m,
            std::size_t k, std::size_t n);

}  // namespace ocfer
