#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "har/tensor.hpp"

namespace har::metrics {

/// Attribute pseudo-probabilities for a batch, optionally decoded to
/// class indices by the nearest-neighbor step.
struct PredictionBatch {
    Tensor scores;  // [B, n], every value strictly inside (0, 1)
    std::optional<std::vector<int>> decoded;
};

/// Clamp applied to predicted scores before logs in the binary cross-entropy.
inline constexpr double kBceEpsilon = 1e-12;

/// Elementwise 1 / (1 + e^-x). Output strictly inside (0, 1).
Tensor sigmoid(const Tensor& x);

/// Stabilized softmax over a rank-1 tensor; output sums to 1.
Tensor softmax(const Tensor& x);

/// Mean binary cross-entropy between a binary target vector and predicted
/// scores in (0, 1). Scores are clamped to [kBceEpsilon, 1 - kBceEpsilon]
/// before the logs. Throws ValidationError when the target is not binary.
double bce_loss(const Tensor& target, const Tensor& predicted);

/// Gradient of bce_loss with respect to the predicted scores.
Tensor bce_loss_grad(const Tensor& target, const Tensor& predicted);

/// Per-class sample counts, taken from the true labels.
struct ClassCounts {
    std::vector<std::size_t> per_class;
    std::size_t total = 0;

    static ClassCounts from_labels(const std::vector<int>& labels, std::size_t class_count);
};

struct PrecisionRecall {
    std::vector<double> precision;  // TP / (TP + FP), 0 when the denominator is 0
    std::vector<double> recall;     // TP / (TP + FN), 0 when the denominator is 0
};

PrecisionRecall per_class_precision_recall(const std::vector<int>& predicted,
                                           const std::vector<int>& truth,
                                           std::size_t class_count);

/// Class-frequency-weighted mean of per-class F1 scores, weights n_i/N counted
/// from the true labels. Per-class F1 is 0 when precision + recall is 0.
double weighted_f1(const std::vector<int>& predicted, const std::vector<int>& truth,
                   std::size_t class_count);

}  // namespace har::metrics
