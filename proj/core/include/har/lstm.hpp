#pragma once

#include <array>
#include <cstddef>

#include "har/tensor.hpp"

namespace har::nn {

/// Gate order used throughout: input, forget, cell candidate, output.
enum LstmGate : std::size_t { kGateInput = 0, kGateForget = 1, kGateCell = 2, kGateOutput = 3 };

/// Standard LSTM cell parameters: sigmoid gates, tanh cell activation.
struct LstmParams {
    std::size_t input_size = 0;
    std::size_t hidden_size = 0;
    std::array<Tensor, 4> w_input;      // each [M, H]
    std::array<Tensor, 4> w_recurrent;  // each [H, H]
    std::array<Tensor, 4> bias;         // each [H]

    static LstmParams zeros(std::size_t input_size, std::size_t hidden_size);
    void check() const;
};

/// Per-step values retained by the forward pass for backpropagation
/// through time.
struct LstmCache {
    Tensor x_seq;        // [T, M]
    Tensor gates;        // [T, 4, H], post-activation
    Tensor cells;        // [T, H]
    Tensor tanh_cells;   // [T, H]
    Tensor hidden;       // [T, H]
    Tensor h0, c0;       // [H]
};

struct LstmResult {
    Tensor hidden_seq;  // [T, H]
    Tensor h_final;     // [H]
    Tensor c_final;     // [H]
};

struct LstmGrads {
    Tensor seq;         // [T, M]
    LstmParams params;  // same shapes, holding gradients
    Tensor h0, c0;      // [H]
};

/// Applies the gate recurrence stepwise over seq [T, M] starting from
/// (h0, c0); returns the full hidden sequence. T >= 1. When `cache` is
/// given it is filled for a later lstm_backward call.
LstmResult lstm_forward(const Tensor& seq, const LstmParams& p, const Tensor& h0, const Tensor& c0,
                        LstmCache* cache = nullptr);

/// Gradients of a scalar loss given its gradient w.r.t. every hidden output.
LstmGrads lstm_backward(const Tensor& grad_hidden_seq, const LstmParams& p,
                        const LstmCache& cache);

}  // namespace har::nn
