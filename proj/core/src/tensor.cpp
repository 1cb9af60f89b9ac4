#include "har/tensor.hpp"

#include <cmath>
#include <sstream>

#include "har/errors.hpp"

namespace har {

namespace {

std::size_t element_count(const std::vector<std::size_t>& shape) {
    std::size_t n = 1;
    for (std::size_t d : shape) n *= d;
    return shape.empty() ? 0 : n;
}

}  // namespace

Tensor::Tensor(std::vector<std::size_t> shape)
    : shape_(std::move(shape)), data_(element_count(shape_), 0.0) {
    init_strides();
}

Tensor::Tensor(std::vector<std::size_t> shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
    if (element_count(shape_) != data_.size()) {
        throw ValidationError("tensor data length " + std::to_string(data_.size()) +
                              " does not match shape " + shape_string(shape_));
    }
    init_strides();
}

Tensor Tensor::full(std::vector<std::size_t> shape, double value) {
    Tensor t(std::move(shape));
    t.fill(value);
    return t;
}

std::size_t Tensor::dim(std::size_t axis) const {
    if (axis >= shape_.size()) {
        throw ValidationError("axis " + std::to_string(axis) + " out of range for shape " +
                              shape_string(shape_));
    }
    return shape_[axis];
}

Tensor Tensor::reshaped(std::vector<std::size_t> shape) const {
    if (element_count(shape) != data_.size()) {
        throw ValidationError("cannot reshape " + shape_string(shape_) + " to " +
                              shape_string(shape));
    }
    return Tensor(std::move(shape), data_);
}

bool Tensor::all_finite() const {
    for (double v : data_) {
        if (!std::isfinite(v)) return false;
    }
    return true;
}

void Tensor::fill(double value) {
    for (double& v : data_) v = value;
}

void Tensor::init_strides() {
    stride_.assign(shape_.empty() ? 0 : shape_.size() - 1, 1);
    for (std::size_t i = stride_.size(); i-- > 0;) {
        stride_[i] = shape_[i + 1] * (i + 1 < stride_.size() ? stride_[i + 1] : 1);
    }
}

std::string shape_string(const std::vector<std::size_t>& shape) {
    std::ostringstream out;
    out << "[";
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i > 0) out << ", ";
        out << shape[i];
    }
    out << "]";
    return out.str();
}

std::string shape_string(const Tensor& t) { return shape_string(t.shape()); }

void require_shape(const Tensor& t, const std::vector<std::size_t>& shape, const char* what) {
    if (t.shape() != shape) {
        throw ValidationError(std::string(what) + ": expected shape " + shape_string(shape) +
                              ", got " + shape_string(t));
    }
}

void require_finite(const Tensor& t, const char* what) {
    if (!t.all_finite()) {
        throw ValidationError(std::string(what) + ": tensor contains NaN or infinite values");
    }
}

}  // namespace har
