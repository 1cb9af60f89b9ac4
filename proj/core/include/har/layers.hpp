#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "har/rng.hpp"
#include "har/tensor.hpp"

namespace har::nn {

enum class Activation { identity, relu, sigmoid };
enum class Mode { train, eval };

const char* activation_name(Activation a);

inline double activate(double z, Activation a) {
    switch (a) {
        case Activation::identity: return z;
        case Activation::relu: return z > 0.0 ? z : 0.0;
        case Activation::sigmoid: return 1.0 / (1.0 + std::exp(-z));
    }
    return z;
}

/// Derivative of the activation expressed through its own output value.
inline double activation_grad_from_output(double y, Activation a) {
    switch (a) {
        case Activation::identity: return 1.0;
        case Activation::relu: return y > 0.0 ? 1.0 : 0.0;
        case Activation::sigmoid: return y * (1.0 - y);
    }
    return 1.0;
}

/// Filters of size [F, 1] shared across all D sensor channels.
struct ConvParams {
    Tensor weights;  // [F, 1, C_in, C_out]
    Tensor bias;     // [C_out]

    std::size_t filter_size() const { return weights.dim(0); }
    std::size_t in_channels() const { return weights.dim(2); }
    std::size_t out_channels() const { return weights.dim(3); }
};

struct ConvGrads {
    Tensor x;
    Tensor weights;
    Tensor bias;
};

/// Valid (unpadded) convolution along the time axis only:
///   out[t,d,co] = act( sum_ci sum_f w[f,0,ci,co] * x[t+f,d,ci] + b[co] )
/// Input [T, D, C_in] -> output [T - F + 1, D, C_out]. Requires T >= F.
Tensor temporal_conv_forward(const Tensor& x, const ConvParams& p, Activation act);

/// Gradients of a scalar loss under the forward contract. `output` must be
/// the forward result for the same (x, p, act); it supplies the activation
/// mask without recomputing the convolution.
ConvGrads temporal_conv_backward(const Tensor& grad_out, const Tensor& x, const Tensor& output,
                                 const ConvParams& p, Activation act);

/// Same, recomputing the forward output internally.
ConvGrads temporal_conv_backward(const Tensor& grad_out, const Tensor& x, const ConvParams& p,
                                 Activation act);

/// Max over windows of `pool` time steps:
///   out[t,d,c] = max_{0 <= p < pool} x[t*stride + p, d, c]
/// Output length floor((T - pool) / stride) + 1. Requires T >= pool >= 1.
/// When `argmax` is given it receives one flat input index per output value
/// (first maximum wins) for use by max_pool_backward.
Tensor max_pool_forward(const Tensor& x, std::size_t pool, std::size_t stride,
                        std::vector<std::size_t>* argmax = nullptr);

Tensor max_pool_backward(const Tensor& grad_out, const std::vector<std::size_t>& argmax,
                         const std::vector<std::size_t>& input_shape);

struct DenseParams {
    Tensor weights;  // [M, U]
    Tensor bias;     // [U]

    std::size_t in_width() const { return weights.dim(0); }
    std::size_t out_width() const { return weights.dim(1); }
};

struct DenseGrads {
    Tensor x;
    Tensor weights;
    Tensor bias;
};

/// act(x W + b) for a rank-1 input of width M.
Tensor fully_connected_forward(const Tensor& x, const DenseParams& p, Activation act);

DenseGrads fully_connected_backward(const Tensor& grad_out, const Tensor& x, const Tensor& output,
                                    const DenseParams& p, Activation act);

/// Inverted dropout: in train mode each element is zeroed with probability
/// `rate` and survivors are scaled by 1/(1-rate); eval mode is the identity.
/// When `mask` is given it receives the per-element keep scale (0 or
/// 1/(1-rate)) so the same mask can be replayed in the backward pass.
Tensor dropout(const Tensor& x, double rate, Mode mode, RngState& rng, Tensor* mask = nullptr);

}  // namespace har::nn
