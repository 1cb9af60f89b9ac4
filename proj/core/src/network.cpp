#include "har/network.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <thread>

#include "har/digest.hpp"
#include "har/errors.hpp"
#include "har/version.hpp"

namespace har::nn {

const char* architecture_name(Architecture a) {
    switch (a) {
        case Architecture::attr_cnn: return "attrCNN";
        case Architecture::attr_deepconvlstm: return "attrDeepConvLSTM";
        case Architecture::attr_cnn_imu: return "attrCNN-IMU";
    }
    return "?";
}

Architecture parse_architecture(const std::string& name) {
    if (name == "attrCNN") return Architecture::attr_cnn;
    if (name == "attrDeepConvLSTM") return Architecture::attr_deepconvlstm;
    if (name == "attrCNN-IMU") return Architecture::attr_cnn_imu;
    throw ValidationError("unknown architecture '" + name +
                          "' (expected attrCNN, attrDeepConvLSTM, or attrCNN-IMU)");
}

void NetworkConfig::validate() const {
    if (window_length < 1) throw ValidationError("network: window length must be >= 1");
    if (channel_count < 1) throw ValidationError("network: channel count must be >= 1");
    if (attribute_count < 1) throw ValidationError("network: attribute count must be >= 1");
    if (conv_filters < 1) throw ValidationError("network: conv filter count must be >= 1");
    if (filter_size < 1) throw ValidationError("network: filter size must be >= 1");
    if (hidden_units < 1) throw ValidationError("network: hidden units must be >= 1");
    if (pool_size < 1 || pool_stride < 1) {
        throw ValidationError("network: pool size and stride must be >= 1");
    }
    if (dropout_rate < 0.0 || dropout_rate >= 1.0) {
        throw ValidationError("network: dropout rate must be in [0, 1)");
    }
    for (std::size_t idx : pool_after) {
        if (idx < 1 || idx > kConvLayers) {
            throw ValidationError("network: pool_after entries must be conv indices 1.." +
                                  std::to_string(kConvLayers));
        }
    }
    conv_stack_output_length();  // throws when the time axis collapses

    if (architecture == Architecture::attr_cnn_imu) {
        if (imu_groups.empty()) {
            throw ValidationError("attrCNN-IMU requires at least one IMU channel group");
        }
        std::set<std::size_t> seen;
        for (const auto& group : imu_groups) {
            if (group.empty()) throw ValidationError("attrCNN-IMU: empty IMU channel group");
            for (std::size_t ch : group) {
                if (ch >= channel_count) {
                    throw ValidationError("attrCNN-IMU: channel index " + std::to_string(ch) +
                                          " outside [0, " + std::to_string(channel_count) + ")");
                }
                if (!seen.insert(ch).second) {
                    throw ValidationError("attrCNN-IMU: channel " + std::to_string(ch) +
                                          " appears in more than one group");
                }
            }
        }
        if (seen.size() != channel_count) {
            throw ValidationError("attrCNN-IMU: IMU groups must cover all " +
                                  std::to_string(channel_count) + " channels");
        }
    }
}

std::size_t NetworkConfig::conv_stack_output_length() const {
    std::size_t t = window_length;
    for (std::size_t conv = 1; conv <= kConvLayers; ++conv) {
        if (t < filter_size) {
            throw ValidationError("network: time length collapses at conv " +
                                  std::to_string(conv) + " (length " + std::to_string(t) +
                                  " < filter size " + std::to_string(filter_size) + ")");
        }
        t = t - filter_size + 1;
        if (std::find(pool_after.begin(), pool_after.end(), conv) != pool_after.end()) {
            if (t < pool_size) {
                throw ValidationError("network: time length collapses at pool after conv " +
                                      std::to_string(conv));
            }
            t = (t - pool_size) / pool_stride + 1;
        }
    }
    return t;
}

nlohmann::json NetworkConfig::to_json() const {
    nlohmann::json j{
        {"architecture", architecture_name(architecture)},
        {"window_length", window_length},
        {"channel_count", channel_count},
        {"num_attributes", attribute_count},
        {"conv_filters", conv_filters},
        {"filter_size", filter_size},
        {"hidden_units", hidden_units},
        {"pool_after", pool_after},
        {"pool_size", pool_size},
        {"pool_stride", pool_stride},
        {"dropout_rate", dropout_rate},
    };
    if (!imu_groups.empty()) j["imu_groups"] = imu_groups;
    return j;
}

NetworkConfig NetworkConfig::from_json(const nlohmann::json& j) {
    NetworkConfig cfg;
    try {
        cfg.architecture = parse_architecture(j.at("architecture").get<std::string>());
        cfg.window_length = j.value("window_length", std::size_t{0});
        cfg.channel_count = j.value("channel_count", std::size_t{0});
        cfg.attribute_count = j.at("num_attributes").get<std::size_t>();
        cfg.conv_filters = j.value("conv_filters", std::size_t{64});
        cfg.filter_size = j.value("filter_size", std::size_t{5});
        cfg.hidden_units = j.value("hidden_units", std::size_t{128});
        cfg.pool_after = j.value("pool_after", std::vector<std::size_t>{});
        cfg.pool_size = j.value("pool_size", std::size_t{2});
        cfg.pool_stride = j.value("pool_stride", std::size_t{1});
        cfg.dropout_rate = j.value("dropout_rate", 0.5);
        cfg.imu_groups = j.value("imu_groups", std::vector<std::vector<std::size_t>>{});
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("network config: ") + e.what());
    }
    return cfg;
}

Network::Network(NetworkConfig cfg, std::vector<std::unique_ptr<Layer>> layers,
                 std::uint64_t seed)
    : cfg_(std::move(cfg)), layers_(std::move(layers)), seed_(seed) {}

Tensor Network::forward_sample(const Tensor& x, Mode mode, RngState* rng) const {
    require_shape(x, {cfg_.window_length, cfg_.channel_count}, "network input");
    require_finite(x, "network input");
    if (mode == Mode::train && rng == nullptr) {
        throw ValidationError("train-mode forward requires an RngState");
    }

    Tensor value = x.reshaped({cfg_.window_length, cfg_.channel_count, 1});
    for (const auto& layer : layers_) {
        value = layer->forward(value, mode, rng, nullptr);
    }
    return value;
}

Tensor Network::forward(const Tensor& batch, Mode mode, RngState* rng,
                        std::size_t threads) const {
    if (batch.rank() != 3) {
        throw ValidationError("network batch must be [B, T, D], got " + shape_string(batch));
    }
    const std::size_t B = batch.dim(0);
    const std::size_t T = cfg_.window_length, D = cfg_.channel_count;
    if (batch.dim(1) != T || batch.dim(2) != D) {
        throw ValidationError("network batch shape " + shape_string(batch) +
                              " does not match configured [*, " + std::to_string(T) + ", " +
                              std::to_string(D) + "]");
    }

    Tensor scores({B, cfg_.attribute_count});
    auto run_range = [&](std::size_t begin, std::size_t end) {
        for (std::size_t b = begin; b < end; ++b) {
            Tensor sample({T, D},
                          std::vector<double>(batch.data() + b * T * D,
                                              batch.data() + (b + 1) * T * D));
            const Tensor out = forward_sample(sample, mode, rng);
            std::copy(out.data(), out.data() + out.size(),
                      scores.data() + b * cfg_.attribute_count);
        }
    };

    // Train mode stays sequential so dropout draws follow sample order.
    if (threads <= 1 || mode == Mode::train || B < 2) {
        run_range(0, B);
        return scores;
    }

    const std::size_t worker_count = std::min(threads, B);
    std::vector<std::thread> workers;
    workers.reserve(worker_count);
    const std::size_t chunk = (B + worker_count - 1) / worker_count;
    for (std::size_t w = 0; w < worker_count; ++w) {
        const std::size_t begin = w * chunk;
        const std::size_t end = std::min(B, begin + chunk);
        if (begin >= end) break;
        workers.emplace_back(run_range, begin, end);
    }
    for (auto& t : workers) t.join();
    return scores;
}

Network::Tape Network::forward_taped(const Tensor& x, RngState& rng) const {
    require_shape(x, {cfg_.window_length, cfg_.channel_count}, "network input");
    require_finite(x, "network input");

    Tape tape;
    tape.caches.resize(layers_.size());
    Tensor value = x.reshaped({cfg_.window_length, cfg_.channel_count, 1});
    for (std::size_t i = 0; i < layers_.size(); ++i) {
        value = layers_[i]->forward(value, Mode::train, &rng, &tape.caches[i]);
    }
    tape.scores = std::move(value);
    return tape;
}

void Network::backward(const Tape& tape, const Tensor& grad_scores,
                       std::vector<Tensor>& grads) const {
    const auto params = parameters();
    if (grads.size() != params.size()) {
        throw ValidationError("gradient buffer does not match parameter count");
    }

    // Per-layer views into the flat gradient list, in parameters() order.
    std::vector<std::vector<Tensor*>> layer_grads(layers_.size());
    {
        std::size_t offset = 0;
        for (std::size_t i = 0; i < layers_.size(); ++i) {
            const std::size_t count = layers_[i]->parameters().size();
            for (std::size_t k = 0; k < count; ++k) layer_grads[i].push_back(&grads[offset + k]);
            offset += count;
        }
    }

    Tensor grad = grad_scores;
    for (std::size_t i = layers_.size(); i-- > 0;) {
        grad = layers_[i]->backward(grad, *tape.caches[i], layer_grads[i]);
    }
}

std::vector<Tensor*> Network::parameters() {
    std::vector<Tensor*> out;
    for (auto& layer : layers_) {
        for (Tensor* p : layer->parameters()) out.push_back(p);
    }
    return out;
}

std::vector<const Tensor*> Network::parameters() const {
    std::vector<const Tensor*> out;
    for (const auto& layer : layers_) {
        for (const Tensor* p : static_cast<const Layer&>(*layer).parameters()) out.push_back(p);
    }
    return out;
}

std::size_t Network::parameter_count() const {
    std::size_t count = 0;
    for (const Tensor* p : parameters()) count += p->size();
    return count;
}

std::vector<Tensor> Network::zero_gradients() const {
    std::vector<Tensor> grads;
    for (const Tensor* p : parameters()) grads.emplace_back(p->shape());
    return grads;
}

std::string Network::parameter_digest() const {
    Fnv1a hash;
    for (const Tensor* p : parameters()) {
        hash.update(std::span<const double>(p->data(), p->size()));
    }
    return hash.hex();
}

std::vector<std::string> Network::layer_kinds() const {
    std::vector<std::string> kinds;
    kinds.reserve(layers_.size());
    for (const auto& layer : layers_) kinds.emplace_back(layer->kind());
    return kinds;
}

nlohmann::json Network::checkpoint() const {
    nlohmann::json params = nlohmann::json::array();
    for (const Tensor* p : parameters()) {
        params.push_back(nlohmann::json{{"shape", p->shape()}, {"data", p->values()}});
    }
    return nlohmann::json{{"version", kCheckpointSchemaVersion},
                          {"artifact_version", kVersion},
                          {"config", cfg_.to_json()},
                          {"seed", seed_},
                          {"parameters", std::move(params)}};
}

void Network::save_checkpoint(const std::filesystem::path& path) const {
    std::ofstream out(path);
    if (!out) throw ValidationError("cannot write checkpoint: " + path.string());
    out << checkpoint().dump(2) << "\n";
    if (!out) throw std::runtime_error("failed writing checkpoint: " + path.string());
}

}  // namespace har::nn
