#include "har/training.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "har/errors.hpp"
#include "har/metrics.hpp"
#include "har/models.hpp"

namespace har {

void TrainConfig::validate() const {
    if (!(learning_rate > 0.0)) throw ValidationError("train: learning rate must be > 0");
    if (!(rms_decay > 0.0) || !(rms_decay < 1.0)) {
        throw ValidationError("train: RMS decay must be in (0, 1)");
    }
    if (batch_size < 1) throw ValidationError("train: batch size must be >= 1");
    if (epochs < 1) throw ValidationError("train: epochs must be >= 1");
    if (dropout_rate < 0.0 || dropout_rate >= 1.0) {
        throw ValidationError("train: dropout rate must be in [0, 1)");
    }
    if (noise_sigma < 0.0) throw ValidationError("train: noise sigma must be >= 0");
    if (!(rmsprop_epsilon > 0.0)) throw ValidationError("train: rmsprop epsilon must be > 0");
}

nlohmann::json TrainConfig::to_json() const {
    return nlohmann::json{{"learning_rate", learning_rate},
                          {"rms_decay", rms_decay},
                          {"batch_size", batch_size},
                          {"epochs", epochs},
                          {"dropout_rate", dropout_rate},
                          {"seed", seed},
                          {"shuffle", shuffle},
                          {"full_batch", full_batch},
                          {"noise_sigma", noise_sigma},
                          {"rmsprop_epsilon", rmsprop_epsilon}};
}

TrainConfig TrainConfig::from_json(const nlohmann::json& j) {
    TrainConfig cfg;
    try {
        cfg.learning_rate = j.value("learning_rate", 1e-4);
        cfg.rms_decay = j.value("rms_decay", 0.9);
        cfg.batch_size = j.value("batch_size", std::size_t{100});
        cfg.epochs = j.value("epochs", std::size_t{1});
        cfg.dropout_rate = j.value("dropout_rate", 0.5);
        cfg.seed = j.value("seed", std::uint64_t{0});
        cfg.shuffle = j.value("shuffle", true);
        cfg.full_batch = j.value("full_batch", false);
        cfg.noise_sigma = j.value("noise_sigma", 0.01);
        cfg.rmsprop_epsilon = j.value("rmsprop_epsilon", 1e-8);
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("train config: ") + e.what());
    }
    cfg.validate();
    return cfg;
}

RmspropState RmspropState::for_parameters(const std::vector<Tensor*>& params, double eps) {
    RmspropState state;
    state.epsilon = eps;
    state.cache.reserve(params.size());
    for (const Tensor* p : params) state.cache.emplace_back(p->shape());
    return state;
}

void rmsprop_step(std::vector<Tensor*>& params, const std::vector<Tensor>& grads,
                  RmspropState& state, const TrainConfig& cfg) {
    if (params.size() != grads.size() || params.size() != state.cache.size()) {
        throw ValidationError("rmsprop_step: parameter/gradient/state count mismatch");
    }
    const double decay = cfg.rms_decay;
    const double lr = cfg.learning_rate;
    for (std::size_t i = 0; i < params.size(); ++i) {
        Tensor& p = *params[i];
        const Tensor& g = grads[i];
        Tensor& c = state.cache[i];
        if (!p.same_shape(g) || !p.same_shape(c)) {
            throw ValidationError("rmsprop_step: shape mismatch at parameter " +
                                  std::to_string(i));
        }
        for (std::size_t k = 0; k < p.size(); ++k) {
            const double gv = g[k];
            if (!std::isfinite(gv)) {
                throw ValidationError("rmsprop_step: non-finite gradient at parameter " +
                                      std::to_string(i));
            }
            c[k] = decay * c[k] + (1.0 - decay) * gv * gv;
            p[k] -= lr * gv / (std::sqrt(c[k]) + state.epsilon);
        }
    }
}

nlohmann::json Metrics::to_json() const {
    nlohmann::json per_class = nlohmann::json::array();
    for (std::size_t k = 0; k < precision.size(); ++k) {
        per_class.push_back(nlohmann::json{{"class", k},
                                           {"precision", precision[k]},
                                           {"recall", recall[k]},
                                           {"f1", f1[k]},
                                           {"support", support[k]}});
    }
    return nlohmann::json{{"weighted_f1", weighted_f1},
                          {"mean_bce", mean_bce},
                          {"sample_count", sample_count},
                          {"per_class", std::move(per_class)}};
}

namespace {

Tensor score_row(const Tensor& scores, std::size_t b) {
    const std::size_t n = scores.dim(1);
    return Tensor({n}, std::vector<double>(scores.data() + b * n, scores.data() + (b + 1) * n));
}

}  // namespace

TrainResult train(nn::Network& net, const data::WindowedDataset& train_set,
                  const AttributeMatrix& attributes, const TrainConfig& cfg) {
    cfg.validate();
    const std::size_t B = train_set.size();
    if (B == 0) throw ValidationError("train: empty dataset");
    for (int label : train_set.labels) {
        if (label < 0 || static_cast<std::size_t>(label) >= attributes.class_count()) {
            throw ValidationError("train: label " + std::to_string(label) +
                                  " has no attribute row");
        }
    }
    if (net.config().attribute_count != attributes.attribute_count()) {
        throw ValidationError("train: network emits " +
                              std::to_string(net.config().attribute_count) +
                              " attributes, matrix has " +
                              std::to_string(attributes.attribute_count()));
    }

    RngState rng(cfg.seed);
    auto params = net.parameters();
    RmspropState state = RmspropState::for_parameters(params, cfg.rmsprop_epsilon);
    const std::size_t batch_size = cfg.full_batch ? B : std::min(cfg.batch_size, B);
    const Tensor all_targets = targets_for_batch(train_set.labels, attributes);
    const std::size_t n = attributes.attribute_count();

    std::vector<std::size_t> order(B);
    std::iota(order.begin(), order.end(), 0);

    TrainResult result;
    result.loss_curve.reserve(cfg.epochs);

    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        if (cfg.shuffle) {
            // Fisher-Yates on the shared stream keeps the run reproducible.
            for (std::size_t i = B; i-- > 1;) {
                const std::size_t j = rng.uniform_index(i + 1);
                std::swap(order[i], order[j]);
            }
        }

        double epoch_loss = 0.0;
        for (std::size_t start = 0; start < B; start += batch_size) {
            const std::size_t end = std::min(B, start + batch_size);
            const std::size_t batch_n = end - start;
            const double inv_batch = 1.0 / static_cast<double>(batch_n);

            std::vector<Tensor> grads = net.zero_gradients();
            for (std::size_t i = start; i < end; ++i) {
                const std::size_t idx = order[i];
                Tensor x = train_set.segment(idx);
                if (cfg.noise_sigma > 0.0) {
                    x = data::add_gaussian_noise(x, 0.0, cfg.noise_sigma, rng);
                }
                const Tensor target({n}, std::vector<double>(all_targets.data() + idx * n,
                                                             all_targets.data() + (idx + 1) * n));
                nn::Network::Tape tape = net.forward_taped(x, rng);
                epoch_loss += metrics::bce_loss(target, tape.scores);
                Tensor grad_scores = metrics::bce_loss_grad(target, tape.scores);
                for (double& v : grad_scores.values()) v *= inv_batch;
                net.backward(tape, grad_scores, grads);
            }
            rmsprop_step(params, grads, state, cfg);
        }
        result.loss_curve.push_back(epoch_loss / static_cast<double>(B));
    }
    return result;
}

Metrics evaluate_scores(const Tensor& scores, const std::vector<int>& labels,
                        const AttributeMatrix& attributes) {
    if (scores.rank() != 2 || scores.dim(0) != labels.size() ||
        scores.dim(1) != attributes.attribute_count()) {
        throw ValidationError("evaluate_scores: scores must be [B, n] matching labels");
    }
    if (labels.empty()) throw ValidationError("evaluate_scores: empty dataset");

    const std::size_t B = labels.size();
    const std::size_t K = attributes.class_count();
    std::vector<int> predicted(B);
    double bce_sum = 0.0;
    for (std::size_t b = 0; b < B; ++b) {
        const Tensor row = score_row(scores, b);
        predicted[b] = static_cast<int>(decode_nearest(row, attributes));
        const Tensor target = targets_for_batch({labels[b]}, attributes).reshaped(
            {attributes.attribute_count()});
        bce_sum += metrics::bce_loss(target, row);
    }

    Metrics out;
    out.weighted_f1 = metrics::weighted_f1(predicted, labels, K);
    const metrics::PrecisionRecall pr = metrics::per_class_precision_recall(predicted, labels, K);
    const metrics::ClassCounts counts = metrics::ClassCounts::from_labels(labels, K);
    out.precision = pr.precision;
    out.recall = pr.recall;
    out.f1.assign(K, 0.0);
    for (std::size_t k = 0; k < K; ++k) {
        const double denom = pr.precision[k] + pr.recall[k];
        if (denom > 0.0) out.f1[k] = 2.0 * pr.precision[k] * pr.recall[k] / denom;
    }
    out.support = counts.per_class;
    out.mean_bce = bce_sum / static_cast<double>(B);
    out.sample_count = B;
    return out;
}

Metrics evaluate(const nn::Network& net, const data::WindowedDataset& dataset,
                 const AttributeMatrix& attributes, std::size_t threads) {
    if (dataset.size() == 0) throw ValidationError("evaluate: empty dataset");
    const metrics::PredictionBatch batch =
        nn::predict(net, dataset.segments, nn::Mode::eval, nullptr, threads);
    return evaluate_scores(batch.scores, dataset.labels, attributes);
}

}  // namespace har
