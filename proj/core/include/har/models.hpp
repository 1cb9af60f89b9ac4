#pragma once

#include <cstdint>
#include <filesystem>

#include "har/metrics.hpp"
#include "har/network.hpp"

namespace har::nn {

/// Four temporal convolutions (ReLU, optional pools), flatten, two
/// fully-connected ReLU layers with dropout on their inputs, and a
/// sigmoid head over n attributes.
Network build_attr_cnn(const NetworkConfig& cfg, std::uint64_t seed);

/// Same convolutional stack, then two stacked LSTM layers over the
/// remaining time axis; the final hidden state feeds the sigmoid head.
Network build_attr_deepconvlstm(const NetworkConfig& cfg, std::uint64_t seed);

/// One convolutional block per IMU channel group, each with its own
/// fully-connected layer; branch outputs are concatenated and merged by
/// a fully-connected layer before the sigmoid head. With a single group
/// this degenerates to exactly the attrCNN layer sequence.
Network build_attr_cnn_imu(const NetworkConfig& cfg, std::uint64_t seed);

/// Dispatch on cfg.architecture.
Network build_network(const NetworkConfig& cfg, std::uint64_t seed);

/// Attribute scores for a [B, T, D] batch. Eval mode is deterministic;
/// train mode consumes rng for dropout. Decoding is left to the caller.
metrics::PredictionBatch predict(const Network& net, const Tensor& batch, Mode mode,
                                 RngState* rng, std::size_t threads = 1);

Network network_from_checkpoint(const nlohmann::json& j);
Network load_checkpoint(const std::filesystem::path& path);

}  // namespace har::nn
