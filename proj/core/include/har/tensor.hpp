#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace har {

/// Dense n-dimensional array of 64-bit floats in row-major order.
///
/// The shape is immutable after construction except through reshaped(),
/// which preserves the element count. All numeric layers operate on
/// Tensors and reject non-finite values at their boundaries.
class Tensor {
public:
    Tensor() = default;

    /// Zero-filled tensor of the given shape.
    explicit Tensor(std::vector<std::size_t> shape);

    Tensor(std::vector<std::size_t> shape, std::vector<double> data);

    static Tensor zeros(std::vector<std::size_t> shape) { return Tensor(std::move(shape)); }
    static Tensor full(std::vector<std::size_t> shape, double value);

    const std::vector<std::size_t>& shape() const { return shape_; }
    std::size_t rank() const { return shape_.size(); }
    std::size_t dim(std::size_t axis) const;
    std::size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }
    std::vector<double>& values() { return data_; }
    const std::vector<double>& values() const { return data_; }

    double& operator[](std::size_t i) { return data_[i]; }
    double operator[](std::size_t i) const { return data_[i]; }

    double& operator()(std::size_t i) { return data_[i]; }
    double operator()(std::size_t i) const { return data_[i]; }
    double& operator()(std::size_t i, std::size_t j) { return data_[i * stride_[0] + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data_[i * stride_[0] + j]; }
    double& operator()(std::size_t i, std::size_t j, std::size_t k) {
        return data_[i * stride_[0] + j * stride_[1] + k];
    }
    double operator()(std::size_t i, std::size_t j, std::size_t k) const {
        return data_[i * stride_[0] + j * stride_[1] + k];
    }

    /// Same data, new shape; element counts must match.
    Tensor reshaped(std::vector<std::size_t> shape) const;

    bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }
    bool all_finite() const;

    void fill(double value);

    bool operator==(const Tensor& other) const {
        return shape_ == other.shape_ && data_ == other.data_;
    }

private:
    void init_strides();

    std::vector<std::size_t> shape_;
    std::vector<std::size_t> stride_;  // row-major strides, one per leading axis
    std::vector<double> data_;
};

/// "[24, 113, 1]" -- used in error messages.
std::string shape_string(const std::vector<std::size_t>& shape);
std::string shape_string(const Tensor& t);

/// Throws ValidationError naming `what` when the shapes differ.
void require_shape(const Tensor& t, const std::vector<std::size_t>& shape, const char* what);

/// Throws ValidationError naming `what` when any value is NaN or infinite.
void require_finite(const Tensor& t, const char* what);

}  // namespace har
