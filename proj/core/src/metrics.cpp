#include "har/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "har/errors.hpp"

namespace har::metrics {

namespace {

void require_same_size(const Tensor& a, const Tensor& b, const char* what) {
    if (a.size() != b.size()) {
        throw ValidationError(std::string(what) + ": size mismatch, " +
                              std::to_string(a.size()) + " vs " + std::to_string(b.size()));
    }
}

void require_labels(const std::vector<int>& labels, std::size_t class_count, const char* what) {
    if (labels.empty()) throw ValidationError(std::string(what) + ": empty input");
    for (int label : labels) {
        if (label < 0 || static_cast<std::size_t>(label) >= class_count) {
            throw ValidationError(std::string(what) + ": label " + std::to_string(label) +
                                  " outside [0, " + std::to_string(class_count) + ")");
        }
    }
}

}  // namespace

Tensor sigmoid(const Tensor& x) {
    require_finite(x, "sigmoid");
    Tensor out(x.shape());
    for (std::size_t i = 0; i < x.size(); ++i) {
        out[i] = 1.0 / (1.0 + std::exp(-x[i]));
    }
    return out;
}

Tensor softmax(const Tensor& x) {
    require_finite(x, "softmax");
    if (x.size() == 0) throw ValidationError("softmax: empty input");
    Tensor out(x.shape());
    const double max = *std::max_element(x.values().begin(), x.values().end());
    double sum = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        out[i] = std::exp(x[i] - max);
        sum += out[i];
    }
    for (double& v : out.values()) v /= sum;
    return out;
}

double bce_loss(const Tensor& target, const Tensor& predicted) {
    require_same_size(target, predicted, "bce_loss");
    if (target.size() == 0) throw ValidationError("bce_loss: empty input");
    double sum = 0.0;
    for (std::size_t i = 0; i < target.size(); ++i) {
        const double a = target[i];
        if (a != 0.0 && a != 1.0) {
            throw ValidationError("bce_loss: target is not binary at index " + std::to_string(i));
        }
        const double p = std::clamp(predicted[i], kBceEpsilon, 1.0 - kBceEpsilon);
        sum += a * std::log(p) + (1.0 - a) * std::log(1.0 - p);
    }
    return -sum / static_cast<double>(target.size());
}

Tensor bce_loss_grad(const Tensor& target, const Tensor& predicted) {
    require_same_size(target, predicted, "bce_loss_grad");
    Tensor grad(predicted.shape());
    const double inv_n = 1.0 / static_cast<double>(target.size());
    for (std::size_t i = 0; i < target.size(); ++i) {
        const double a = target[i];
        const double p = std::clamp(predicted[i], kBceEpsilon, 1.0 - kBceEpsilon);
        grad[i] = -inv_n * (a / p - (1.0 - a) / (1.0 - p));
    }
    return grad;
}

ClassCounts ClassCounts::from_labels(const std::vector<int>& labels, std::size_t class_count) {
    require_labels(labels, class_count, "ClassCounts");
    ClassCounts counts;
    counts.per_class.assign(class_count, 0);
    for (int label : labels) ++counts.per_class[static_cast<std::size_t>(label)];
    counts.total = labels.size();
    return counts;
}

PrecisionRecall per_class_precision_recall(const std::vector<int>& predicted,
                                           const std::vector<int>& truth,
                                           std::size_t class_count) {
    if (predicted.size() != truth.size()) {
        throw ValidationError("per_class_precision_recall: prediction/truth length mismatch");
    }
    require_labels(truth, class_count, "per_class_precision_recall");
    require_labels(predicted, class_count, "per_class_precision_recall");

    std::vector<std::size_t> tp(class_count, 0), fp(class_count, 0), fn(class_count, 0);
    for (std::size_t i = 0; i < truth.size(); ++i) {
        const auto t = static_cast<std::size_t>(truth[i]);
        const auto p = static_cast<std::size_t>(predicted[i]);
        if (t == p) {
            ++tp[t];
        } else {
            ++fp[p];
            ++fn[t];
        }
    }

    PrecisionRecall out;
    out.precision.assign(class_count, 0.0);
    out.recall.assign(class_count, 0.0);
    for (std::size_t k = 0; k < class_count; ++k) {
        if (tp[k] + fp[k] > 0) {
            out.precision[k] = static_cast<double>(tp[k]) / static_cast<double>(tp[k] + fp[k]);
        }
        if (tp[k] + fn[k] > 0) {
            out.recall[k] = static_cast<double>(tp[k]) / static_cast<double>(tp[k] + fn[k]);
        }
    }
    return out;
}

double weighted_f1(const std::vector<int>& predicted, const std::vector<int>& truth,
                   std::size_t class_count) {
    const PrecisionRecall pr = per_class_precision_recall(predicted, truth, class_count);
    const ClassCounts counts = ClassCounts::from_labels(truth, class_count);

    double f1 = 0.0;
    for (std::size_t k = 0; k < class_count; ++k) {
        const double denom = pr.precision[k] + pr.recall[k];
        if (denom == 0.0 || counts.per_class[k] == 0) continue;
        const double weight =
            static_cast<double>(counts.per_class[k]) / static_cast<double>(counts.total);
        f1 += 2.0 * weight * (pr.precision[k] * pr.recall[k]) / denom;
    }
    return f1;
}

}  // namespace har::metrics
