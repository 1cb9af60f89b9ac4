#include "har/models.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "har/errors.hpp"
#include "har/lstm.hpp"
#include "har/version.hpp"

namespace har::nn {

namespace {

void accumulate(Tensor& into, const Tensor& grad) {
    for (std::size_t i = 0; i < into.size(); ++i) into[i] += grad[i];
}

// ---------------------------------------------------------------------------
// Concrete layers
// ---------------------------------------------------------------------------

struct ConvCache : LayerCache {
    Tensor x, y;
};

class TemporalConvLayer final : public Layer {
public:
    TemporalConvLayer(ConvParams params, Activation act)
        : params_(std::move(params)), act_(act) {}

    Tensor forward(const Tensor& x, Mode, RngState*, CachePtr* cache) const override {
        Tensor y = temporal_conv_forward(x, params_, act_);
        if (cache) {
            auto c = std::make_unique<ConvCache>();
            c->x = x;
            c->y = y;
            *cache = std::move(c);
        }
        return y;
    }

    Tensor backward(const Tensor& grad_out, const LayerCache& cache,
                    std::vector<Tensor*>& param_grads) const override {
        const auto& c = static_cast<const ConvCache&>(cache);
        ConvGrads g = temporal_conv_backward(grad_out, c.x, c.y, params_, act_);
        accumulate(*param_grads[0], g.weights);
        accumulate(*param_grads[1], g.bias);
        return std::move(g.x);
    }

    std::vector<Tensor*> parameters() override { return {&params_.weights, &params_.bias}; }
    std::vector<const Tensor*> parameters() const override {
        return {&params_.weights, &params_.bias};
    }
    const char* kind() const override { return "temporal_conv"; }

private:
    ConvParams params_;
    Activation act_;
};

struct PoolCache : LayerCache {
    std::vector<std::size_t> argmax;
    std::vector<std::size_t> input_shape;
};

class MaxPoolLayer final : public Layer {
public:
    MaxPoolLayer(std::size_t pool, std::size_t stride) : pool_(pool), stride_(stride) {}

    Tensor forward(const Tensor& x, Mode, RngState*, CachePtr* cache) const override {
        if (!cache) return max_pool_forward(x, pool_, stride_);
        auto c = std::make_unique<PoolCache>();
        c->input_shape = x.shape();
        Tensor y = max_pool_forward(x, pool_, stride_, &c->argmax);
        *cache = std::move(c);
        return y;
    }

    Tensor backward(const Tensor& grad_out, const LayerCache& cache,
                    std::vector<Tensor*>&) const override {
        const auto& c = static_cast<const PoolCache&>(cache);
        return max_pool_backward(grad_out, c.argmax, c.input_shape);
    }

    const char* kind() const override { return "max_pool"; }

private:
    std::size_t pool_;
    std::size_t stride_;
};

struct ShapeCache : LayerCache {
    std::vector<std::size_t> input_shape;
};

class FlattenLayer final : public Layer {
public:
    Tensor forward(const Tensor& x, Mode, RngState*, CachePtr* cache) const override {
        if (cache) {
            auto c = std::make_unique<ShapeCache>();
            c->input_shape = x.shape();
            *cache = std::move(c);
        }
        return x.reshaped({x.size()});
    }

    Tensor backward(const Tensor& grad_out, const LayerCache& cache,
                    std::vector<Tensor*>&) const override {
        return grad_out.reshaped(static_cast<const ShapeCache&>(cache).input_shape);
    }

    const char* kind() const override { return "flatten"; }
};

// [T, D, C] -> [T, D*C]; feeds the per-step LSTM input.
class TimeFlattenLayer final : public Layer {
public:
    Tensor forward(const Tensor& x, Mode, RngState*, CachePtr* cache) const override {
        if (x.rank() != 3) {
            throw ValidationError("time_flatten expects [T, D, C], got " + shape_string(x));
        }
        if (cache) {
            auto c = std::make_unique<ShapeCache>();
            c->input_shape = x.shape();
            *cache = std::move(c);
        }
        return x.reshaped({x.dim(0), x.dim(1) * x.dim(2)});
    }

    Tensor backward(const Tensor& grad_out, const LayerCache& cache,
                    std::vector<Tensor*>&) const override {
        return grad_out.reshaped(static_cast<const ShapeCache&>(cache).input_shape);
    }

    const char* kind() const override { return "time_flatten"; }
};

struct DenseCache : LayerCache {
    Tensor x, y;
};

class DenseLayer final : public Layer {
public:
    DenseLayer(DenseParams params, Activation act) : params_(std::move(params)), act_(act) {}

    Tensor forward(const Tensor& x, Mode, RngState*, CachePtr* cache) const override {
        Tensor y = fully_connected_forward(x, params_, act_);
        if (cache) {
            auto c = std::make_unique<DenseCache>();
            c->x = x;
            c->y = y;
            *cache = std::move(c);
        }
        return y;
    }

    Tensor backward(const Tensor& grad_out, const LayerCache& cache,
                    std::vector<Tensor*>& param_grads) const override {
        const auto& c = static_cast<const DenseCache&>(cache);
        DenseGrads g = fully_connected_backward(grad_out, c.x, c.y, params_, act_);
        accumulate(*param_grads[0], g.weights);
        accumulate(*param_grads[1], g.bias);
        return std::move(g.x);
    }

    std::vector<Tensor*> parameters() override { return {&params_.weights, &params_.bias}; }
    std::vector<const Tensor*> parameters() const override {
        return {&params_.weights, &params_.bias};
    }
    const char* kind() const override { return "dense"; }

private:
    DenseParams params_;
    Activation act_;
};

struct LstmLayerCache : LayerCache {
    LstmCache inner;
};

class LstmLayer final : public Layer {
public:
    explicit LstmLayer(LstmParams params) : params_(std::move(params)) {}

    Tensor forward(const Tensor& x, Mode, RngState*, CachePtr* cache) const override {
        const Tensor h0({params_.hidden_size});
        const Tensor c0({params_.hidden_size});
        if (!cache) return lstm_forward(x, params_, h0, c0).hidden_seq;
        auto c = std::make_unique<LstmLayerCache>();
        LstmResult res = lstm_forward(x, params_, h0, c0, &c->inner);
        *cache = std::move(c);
        return res.hidden_seq;
    }

    Tensor backward(const Tensor& grad_out, const LayerCache& cache,
                    std::vector<Tensor*>& param_grads) const override {
        const auto& c = static_cast<const LstmLayerCache&>(cache);
        LstmGrads g = lstm_backward(grad_out, params_, c.inner);
        std::size_t slot = 0;
        for (std::size_t k = 0; k < 4; ++k) {
            accumulate(*param_grads[slot++], g.params.w_input[k]);
            accumulate(*param_grads[slot++], g.params.w_recurrent[k]);
            accumulate(*param_grads[slot++], g.params.bias[k]);
        }
        return std::move(g.seq);
    }

    std::vector<Tensor*> parameters() override {
        std::vector<Tensor*> out;
        for (std::size_t k = 0; k < 4; ++k) {
            out.push_back(&params_.w_input[k]);
            out.push_back(&params_.w_recurrent[k]);
            out.push_back(&params_.bias[k]);
        }
        return out;
    }
    std::vector<const Tensor*> parameters() const override {
        std::vector<const Tensor*> out;
        for (std::size_t k = 0; k < 4; ++k) {
            out.push_back(&params_.w_input[k]);
            out.push_back(&params_.w_recurrent[k]);
            out.push_back(&params_.bias[k]);
        }
        return out;
    }
    const char* kind() const override { return "lstm"; }

private:
    LstmParams params_;
};

// [T, H] -> [H]: final time step, the sequence readout for the head.
class TakeLastLayer final : public Layer {
public:
    Tensor forward(const Tensor& x, Mode, RngState*, CachePtr* cache) const override {
        if (x.rank() != 2) {
            throw ValidationError("take_last expects [T, H], got " + shape_string(x));
        }
        if (cache) {
            auto c = std::make_unique<ShapeCache>();
            c->input_shape = x.shape();
            *cache = std::move(c);
        }
        const std::size_t T = x.dim(0), H = x.dim(1);
        return Tensor({H}, std::vector<double>(x.data() + (T - 1) * H, x.data() + T * H));
    }

    Tensor backward(const Tensor& grad_out, const LayerCache& cache,
                    std::vector<Tensor*>&) const override {
        const auto& shape = static_cast<const ShapeCache&>(cache).input_shape;
        Tensor gx(shape);
        const std::size_t T = shape[0], H = shape[1];
        std::copy(grad_out.data(), grad_out.data() + H, gx.data() + (T - 1) * H);
        return gx;
    }

    const char* kind() const override { return "take_last"; }
};

struct DropoutCache : LayerCache {
    Tensor mask;
};

class DropoutLayer final : public Layer {
public:
    explicit DropoutLayer(double rate) : rate_(rate) {}

    Tensor forward(const Tensor& x, Mode mode, RngState* rng, CachePtr* cache) const override {
        if (mode == Mode::eval || rate_ == 0.0) {
            if (cache) {
                auto c = std::make_unique<DropoutCache>();
                c->mask = Tensor::full(x.shape(), 1.0);
                *cache = std::move(c);
            }
            return x;
        }
        auto c = std::make_unique<DropoutCache>();
        Tensor y = dropout(x, rate_, mode, *rng, &c->mask);
        if (cache) *cache = std::move(c);
        return y;
    }

    Tensor backward(const Tensor& grad_out, const LayerCache& cache,
                    std::vector<Tensor*>&) const override {
        const auto& mask = static_cast<const DropoutCache&>(cache).mask;
        Tensor gx(grad_out.shape());
        for (std::size_t i = 0; i < gx.size(); ++i) gx[i] = grad_out[i] * mask[i];
        return gx;
    }

    const char* kind() const override { return "dropout"; }

private:
    double rate_;
};

// Parallel per-IMU blocks over disjoint channel slices; block outputs are
// concatenated for the merge layer that follows.
class BranchConcatLayer final : public Layer {
public:
    struct Branch {
        std::vector<std::size_t> channels;
        std::vector<std::unique_ptr<Layer>> layers;
    };

    struct Cache : LayerCache {
        std::vector<std::vector<CachePtr>> branch_caches;
        std::vector<std::size_t> input_shape;
    };

    BranchConcatLayer(std::vector<Branch> branches, std::size_t branch_width)
        : branches_(std::move(branches)), branch_width_(branch_width) {}

    Tensor forward(const Tensor& x, Mode mode, RngState* rng, CachePtr* cache) const override {
        if (x.rank() != 3 || x.dim(2) != 1) {
            throw ValidationError("branch_concat expects [T, D, 1], got " + shape_string(x));
        }
        std::unique_ptr<Cache> c;
        if (cache) {
            c = std::make_unique<Cache>();
            c->input_shape = x.shape();
            c->branch_caches.resize(branches_.size());
        }

        Tensor out({branches_.size() * branch_width_});
        for (std::size_t b = 0; b < branches_.size(); ++b) {
            Tensor value = gather_channels(x, branches_[b].channels);
            if (c) c->branch_caches[b].resize(branches_[b].layers.size());
            for (std::size_t i = 0; i < branches_[b].layers.size(); ++i) {
                CachePtr* slot = c ? &c->branch_caches[b][i] : nullptr;
                value = branches_[b].layers[i]->forward(value, mode, rng, slot);
            }
            require_shape(value, {branch_width_}, "branch output");
            std::copy(value.data(), value.data() + branch_width_,
                      out.data() + b * branch_width_);
        }
        if (cache) *cache = std::move(c);
        return out;
    }

    Tensor backward(const Tensor& grad_out, const LayerCache& cache,
                    std::vector<Tensor*>& param_grads) const override {
        const auto& c = static_cast<const Cache&>(cache);
        Tensor gx(c.input_shape);
        const std::size_t T = c.input_shape[0];

        std::size_t offset = 0;
        for (std::size_t b = 0; b < branches_.size(); ++b) {
            const auto& branch = branches_[b];
            std::vector<std::vector<Tensor*>> layer_grads(branch.layers.size());
            for (std::size_t i = 0; i < branch.layers.size(); ++i) {
                const std::size_t count = branch.layers[i]->parameters().size();
                for (std::size_t k = 0; k < count; ++k) {
                    layer_grads[i].push_back(param_grads[offset + k]);
                }
                offset += count;
            }

            Tensor grad({branch_width_},
                        std::vector<double>(grad_out.data() + b * branch_width_,
                                            grad_out.data() + (b + 1) * branch_width_));
            for (std::size_t i = branch.layers.size(); i-- > 0;) {
                grad = branch.layers[i]->backward(grad, *c.branch_caches[b][i], layer_grads[i]);
            }
            // grad is now [T, Dg, 1]; scatter back into the channel slice.
            for (std::size_t t = 0; t < T; ++t) {
                for (std::size_t j = 0; j < branch.channels.size(); ++j) {
                    gx(t, branch.channels[j], 0) += grad(t, j, 0);
                }
            }
        }
        return gx;
    }

    std::vector<Tensor*> parameters() override {
        std::vector<Tensor*> out;
        for (auto& branch : branches_) {
            for (auto& layer : branch.layers) {
                for (Tensor* p : layer->parameters()) out.push_back(p);
            }
        }
        return out;
    }
    std::vector<const Tensor*> parameters() const override {
        std::vector<const Tensor*> out;
        for (const auto& branch : branches_) {
            for (const auto& layer : branch.layers) {
                for (const Tensor* p : static_cast<const Layer&>(*layer).parameters()) {
                    out.push_back(p);
                }
            }
        }
        return out;
    }
    const char* kind() const override { return "branch_concat"; }

private:
    static Tensor gather_channels(const Tensor& x, const std::vector<std::size_t>& channels) {
        const std::size_t T = x.dim(0);
        Tensor out({T, channels.size(), 1});
        for (std::size_t t = 0; t < T; ++t) {
            for (std::size_t j = 0; j < channels.size(); ++j) {
                out(t, j, 0) = x(t, channels[j], 0);
            }
        }
        return out;
    }

    std::vector<Branch> branches_;
    std::size_t branch_width_;
};

// ---------------------------------------------------------------------------
// Initialization and stack assembly
// ---------------------------------------------------------------------------

Tensor glorot_uniform(std::vector<std::size_t> shape, std::size_t fan_in, std::size_t fan_out,
                      RngState& rng) {
    Tensor t(std::move(shape));
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    rng.fill_uniform(t, -limit, limit);
    return t;
}

std::unique_ptr<Layer> make_conv(std::size_t c_in, std::size_t c_out, std::size_t filter,
                                 RngState& rng) {
    ConvParams p;
    p.weights = glorot_uniform({filter, 1, c_in, c_out}, filter * c_in, filter * c_out, rng);
    p.bias = Tensor({c_out});
    return std::make_unique<TemporalConvLayer>(std::move(p), Activation::relu);
}

std::unique_ptr<Layer> make_dense(std::size_t in, std::size_t out, Activation act,
                                  RngState& rng) {
    DenseParams p;
    p.weights = glorot_uniform({in, out}, in, out, rng);
    p.bias = Tensor({out});
    return std::make_unique<DenseLayer>(std::move(p), act);
}

// Forget-gate bias starts at 1 so early training does not flush the cell.
std::unique_ptr<Layer> make_lstm(std::size_t in, std::size_t hidden, RngState& rng) {
    LstmParams p = LstmParams::zeros(in, hidden);
    for (std::size_t k = 0; k < 4; ++k) {
        p.w_input[k] = glorot_uniform({in, hidden}, in, hidden, rng);
        p.w_recurrent[k] = glorot_uniform({hidden, hidden}, hidden, hidden, rng);
    }
    p.bias[kGateForget].fill(1.0);
    return std::make_unique<LstmLayer>(std::move(p));
}

void append_conv_stack(std::vector<std::unique_ptr<Layer>>& layers, const NetworkConfig& cfg,
                       RngState& rng) {
    std::size_t c_in = 1;
    for (std::size_t conv = 1; conv <= NetworkConfig::kConvLayers; ++conv) {
        layers.push_back(make_conv(c_in, cfg.conv_filters, cfg.filter_size, rng));
        c_in = cfg.conv_filters;
        if (std::find(cfg.pool_after.begin(), cfg.pool_after.end(), conv) !=
            cfg.pool_after.end()) {
            layers.push_back(std::make_unique<MaxPoolLayer>(cfg.pool_size, cfg.pool_stride));
        }
    }
}

// Shared tail of attrCNN and of each attrCNN-IMU branch:
// flatten, dropout, one fully-connected ReLU layer.
void append_flatten_dense(std::vector<std::unique_ptr<Layer>>& layers, const NetworkConfig& cfg,
                          std::size_t channels, RngState& rng) {
    const std::size_t flat = cfg.conv_stack_output_length() * channels * cfg.conv_filters;
    layers.push_back(std::make_unique<FlattenLayer>());
    layers.push_back(std::make_unique<DropoutLayer>(cfg.dropout_rate));
    layers.push_back(make_dense(flat, cfg.hidden_units, Activation::relu, rng));
}

bool identity_group(const std::vector<std::size_t>& group, std::size_t channel_count) {
    if (group.size() != channel_count) return false;
    for (std::size_t i = 0; i < group.size(); ++i) {
        if (group[i] != i) return false;
    }
    return true;
}

}  // namespace

Network build_attr_cnn(const NetworkConfig& cfg, std::uint64_t seed) {
    cfg.validate();
    if (cfg.architecture != Architecture::attr_cnn) {
        throw ValidationError("build_attr_cnn called with architecture " +
                              std::string(architecture_name(cfg.architecture)));
    }
    RngState rng(seed);
    std::vector<std::unique_ptr<Layer>> layers;
    append_conv_stack(layers, cfg, rng);
    append_flatten_dense(layers, cfg, cfg.channel_count, rng);
    layers.push_back(std::make_unique<DropoutLayer>(cfg.dropout_rate));
    layers.push_back(make_dense(cfg.hidden_units, cfg.hidden_units, Activation::relu, rng));
    layers.push_back(make_dense(cfg.hidden_units, cfg.attribute_count, Activation::sigmoid, rng));
    return Network(cfg, std::move(layers), seed);
}

Network build_attr_deepconvlstm(const NetworkConfig& cfg, std::uint64_t seed) {
    cfg.validate();
    if (cfg.architecture != Architecture::attr_deepconvlstm) {
        throw ValidationError("build_attr_deepconvlstm called with architecture " +
                              std::string(architecture_name(cfg.architecture)));
    }
    RngState rng(seed);
    std::vector<std::unique_ptr<Layer>> layers;
    append_conv_stack(layers, cfg, rng);
    layers.push_back(std::make_unique<DropoutLayer>(cfg.dropout_rate));
    layers.push_back(std::make_unique<TimeFlattenLayer>());
    layers.push_back(make_lstm(cfg.channel_count * cfg.conv_filters, cfg.hidden_units, rng));
    layers.push_back(make_lstm(cfg.hidden_units, cfg.hidden_units, rng));
    layers.push_back(std::make_unique<TakeLastLayer>());
    layers.push_back(std::make_unique<DropoutLayer>(cfg.dropout_rate));
    layers.push_back(make_dense(cfg.hidden_units, cfg.attribute_count, Activation::sigmoid, rng));
    return Network(cfg, std::move(layers), seed);
}

Network build_attr_cnn_imu(const NetworkConfig& cfg, std::uint64_t seed) {
    cfg.validate();
    if (cfg.architecture != Architecture::attr_cnn_imu) {
        throw ValidationError("build_attr_cnn_imu called with architecture " +
                              std::string(architecture_name(cfg.architecture)));
    }
    RngState rng(seed);
    std::vector<std::unique_ptr<Layer>> layers;

    // A single whole-input group degenerates to the attrCNN layer sequence;
    // building it flat keeps the two architectures bit-identical under a
    // shared seed.
    if (cfg.imu_groups.size() == 1 && identity_group(cfg.imu_groups[0], cfg.channel_count)) {
        append_conv_stack(layers, cfg, rng);
        append_flatten_dense(layers, cfg, cfg.channel_count, rng);
    } else {
        std::vector<BranchConcatLayer::Branch> branches;
        branches.reserve(cfg.imu_groups.size());
        for (const auto& group : cfg.imu_groups) {
            BranchConcatLayer::Branch branch;
            branch.channels = group;
            append_conv_stack(branch.layers, cfg, rng);
            append_flatten_dense(branch.layers, cfg, group.size(), rng);
            branches.push_back(std::move(branch));
        }
        layers.push_back(
            std::make_unique<BranchConcatLayer>(std::move(branches), cfg.hidden_units));
    }

    layers.push_back(std::make_unique<DropoutLayer>(cfg.dropout_rate));
    layers.push_back(make_dense(cfg.imu_groups.size() * cfg.hidden_units, cfg.hidden_units,
                                Activation::relu, rng));
    layers.push_back(make_dense(cfg.hidden_units, cfg.attribute_count, Activation::sigmoid, rng));
    return Network(cfg, std::move(layers), seed);
}

metrics::PredictionBatch predict(const Network& net, const Tensor& batch, Mode mode,
                                 RngState* rng, std::size_t threads) {
    metrics::PredictionBatch out;
    out.scores = net.forward(batch, mode, rng, threads);
    return out;
}

Network build_network(const NetworkConfig& cfg, std::uint64_t seed) {
    switch (cfg.architecture) {
        case Architecture::attr_cnn: return build_attr_cnn(cfg, seed);
        case Architecture::attr_deepconvlstm: return build_attr_deepconvlstm(cfg, seed);
        case Architecture::attr_cnn_imu: return build_attr_cnn_imu(cfg, seed);
    }
    throw ValidationError("unknown architecture");
}

Network network_from_checkpoint(const nlohmann::json& j) {
    try {
        const int version = j.at("version").get<int>();
        if (version != kCheckpointSchemaVersion) {
            throw ValidationError("unsupported checkpoint version " + std::to_string(version));
        }
        NetworkConfig cfg = NetworkConfig::from_json(j.at("config"));
        const auto seed = j.at("seed").get<std::uint64_t>();
        Network net = build_network(cfg, seed);

        const auto& stored = j.at("parameters");
        auto params = net.parameters();
        if (stored.size() != params.size()) {
            throw ValidationError("checkpoint parameter count mismatch: stored " +
                                  std::to_string(stored.size()) + ", network needs " +
                                  std::to_string(params.size()));
        }
        for (std::size_t i = 0; i < params.size(); ++i) {
            const auto shape = stored[i].at("shape").get<std::vector<std::size_t>>();
            auto data = stored[i].at("data").get<std::vector<double>>();
            if (shape != params[i]->shape()) {
                throw ValidationError("checkpoint parameter " + std::to_string(i) +
                                      " shape mismatch");
            }
            *params[i] = Tensor(shape, std::move(data));
        }
        return net;
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("malformed checkpoint: ") + e.what());
    }
}

Network load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot read checkpoint: " + path.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError("malformed checkpoint " + path.string() + ": " + e.what());
    }
    return network_from_checkpoint(j);
}

}  // namespace har::nn
