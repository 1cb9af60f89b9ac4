#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "har/layers.hpp"
#include "har/rng.hpp"
#include "har/tensor.hpp"

namespace har::nn {

enum class Architecture { attr_cnn, attr_deepconvlstm, attr_cnn_imu };

const char* architecture_name(Architecture a);
Architecture parse_architecture(const std::string& name);

/// Shape and hyperparameters of one attribute-predicting network.
/// T, D and the IMU groups come from the dataset; the rest are
/// architecture knobs with the defaults used throughout.
struct NetworkConfig {
    Architecture architecture = Architecture::attr_cnn;
    std::size_t window_length = 0;    // T
    std::size_t channel_count = 0;    // D
    std::size_t attribute_count = 0;  // n

    std::size_t conv_filters = 64;  // C
    std::size_t filter_size = 5;    // F
    std::size_t hidden_units = 128;

    std::vector<std::size_t> pool_after;  // 1-based conv indices followed by a max-pool
    std::size_t pool_size = 2;
    std::size_t pool_stride = 1;

    double dropout_rate = 0.5;

    // Channel indices per IMU branch; must partition [0, D). Only used by
    // attrCNN-IMU.
    std::vector<std::vector<std::size_t>> imu_groups;

    static constexpr std::size_t kConvLayers = 4;

    void validate() const;

    /// Time length remaining after the four valid convolutions and any
    /// configured pools. Throws when it collapses below 1.
    std::size_t conv_stack_output_length() const;

    nlohmann::json to_json() const;
    static NetworkConfig from_json(const nlohmann::json& j);
};

struct LayerCache {
    virtual ~LayerCache() = default;
};
using CachePtr = std::unique_ptr<LayerCache>;

/// One step of the computation graph, operating on a single sample.
///
/// forward() is const and writes no layer state: in eval mode (cache null)
/// it is safe to call concurrently; in train mode the per-call cache
/// carries everything backward() needs.
class Layer {
public:
    virtual ~Layer() = default;

    virtual Tensor forward(const Tensor& x, Mode mode, RngState* rng, CachePtr* cache) const = 0;

    /// Accumulates parameter gradients into `param_grads` (aligned with
    /// parameters()) and returns the gradient w.r.t. the layer input.
    virtual Tensor backward(const Tensor& grad_out, const LayerCache& cache,
                            std::vector<Tensor*>& param_grads) const = 0;

    virtual std::vector<Tensor*> parameters() { return {}; }
    virtual std::vector<const Tensor*> parameters() const { return {}; }
    virtual const char* kind() const = 0;
};

/// Ordered layer stack mapping a [T, D] window to n attribute scores
/// in (0, 1). Parameters are owned by the layers; the trainer mutates
/// them through parameters() and is the single writer.
class Network {
public:
    Network(NetworkConfig cfg, std::vector<std::unique_ptr<Layer>> layers, std::uint64_t seed);

    const NetworkConfig& config() const { return cfg_; }
    std::uint64_t init_seed() const { return seed_; }

    /// Scores for one [T, D] window. rng is only consulted in train mode
    /// (dropout); eval mode is deterministic and thread-safe.
    Tensor forward_sample(const Tensor& x, Mode mode, RngState* rng) const;

    /// Scores for a [B, T, D] batch as [B, n]. `threads` > 1 parallelizes
    /// over samples in eval mode only (bit-identical to the sequential
    /// path since samples are independent).
    Tensor forward(const Tensor& batch, Mode mode, RngState* rng, std::size_t threads = 1) const;

    struct Tape {
        Tensor scores;
        std::vector<CachePtr> caches;
    };

    /// Train-mode forward recording per-layer caches for backward().
    Tape forward_taped(const Tensor& x, RngState& rng) const;

    /// Accumulates dLoss/dParams into `grads` (aligned with parameters())
    /// given dLoss/dScores for the taped sample.
    void backward(const Tape& tape, const Tensor& grad_scores, std::vector<Tensor>& grads) const;

    std::vector<Tensor*> parameters();
    std::vector<const Tensor*> parameters() const;
    std::size_t parameter_count() const;

    /// Zero tensors shaped like parameters(), for gradient accumulation.
    std::vector<Tensor> zero_gradients() const;

    /// Digest over all parameter values; distinguishes initializations.
    std::string parameter_digest() const;

    std::vector<std::string> layer_kinds() const;

    nlohmann::json checkpoint() const;
    void save_checkpoint(const std::filesystem::path& path) const;

private:
    NetworkConfig cfg_;
    std::vector<std::unique_ptr<Layer>> layers_;
    std::uint64_t seed_ = 0;
};

}  // namespace har::nn
