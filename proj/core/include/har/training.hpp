#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include <nlohmann/json.hpp>

#include "har/attributes.hpp"
#include "har/data.hpp"
#include "har/network.hpp"
#include "har/tensor.hpp"

namespace har {

struct TrainConfig {
    double learning_rate = 1e-4;
    double rms_decay = 0.9;
    std::size_t batch_size = 100;
    std::size_t epochs = 1;
    double dropout_rate = 0.5;
    std::uint64_t seed = 0;
    bool shuffle = true;
    bool full_batch = false;     // one batch spanning the whole dataset
    double noise_sigma = 0.01;   // training-time Gaussian augmentation
    double rmsprop_epsilon = 1e-8;

    void validate() const;

    nlohmann::json to_json() const;
    static TrainConfig from_json(const nlohmann::json& j);
};

/// Per-parameter running mean square of gradients, zero-initialized.
struct RmspropState {
    std::vector<Tensor> cache;
    double epsilon = 1e-8;

    static RmspropState for_parameters(const std::vector<Tensor*>& params, double epsilon);
};

/// cache' = decay * cache + (1 - decay) * g^2
/// param' = param - lr * g / (sqrt(cache') + epsilon)
void rmsprop_step(std::vector<Tensor*>& params, const std::vector<Tensor>& grads,
                  RmspropState& state, const TrainConfig& cfg);

/// Evaluation summary for one dataset.
struct Metrics {
    double weighted_f1 = 0.0;
    std::vector<double> precision;
    std::vector<double> recall;
    std::vector<double> f1;
    std::vector<std::size_t> support;
    double mean_bce = 0.0;
    std::size_t sample_count = 0;

    nlohmann::json to_json() const;
};

struct TrainResult {
    std::vector<double> loss_curve;  // one mean BCE per epoch
};

/// Mini-batch gradient descent with RMSProp against attribute targets;
/// Gaussian noise augmentation on training inputs; fixed epoch count;
/// deterministic given cfg.seed. The network is updated in place.
TrainResult train(nn::Network& net, const data::WindowedDataset& train_set,
                  const AttributeMatrix& attributes, const TrainConfig& cfg);

/// Decodes attribute scores to classes and scores them against labels.
/// `scores` is [B, n]; labels has length B.
Metrics evaluate_scores(const Tensor& scores, const std::vector<int>& labels,
                        const AttributeMatrix& attributes);

/// Eval-mode forward (no dropout, no noise), nearest-neighbor decoding,
/// weighted F1 against the true labels.
Metrics evaluate(const nn::Network& net, const data::WindowedDataset& dataset,
                 const AttributeMatrix& attributes, std::size_t threads = 1);

}  // namespace har
