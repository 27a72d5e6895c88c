#include "fedfta/model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "fedfta/errors.hpp"

namespace fedfta {

namespace {

std::size_t layer_fan_in(const HeadShape& shape, std::size_t layer) {
    return layer == 0 ? shape.input_dim : shape.widths[layer - 1];
}

}  // namespace

std::size_t HeadShape::param_count() const {
    std::size_t total = 0;
    std::size_t fan_in = input_dim;
    for (std::size_t w : widths) {
        total += fan_in * w + w;
        fan_in = w;
    }
    return total;
}

FrozenBase FrozenBase::create(std::size_t input_dim, std::size_t feature_dim, SeededRng& rng) {
    if (input_dim == 0 || feature_dim == 0) {
        throw ArgumentError("FrozenBase: dimensions must be positive");
    }
    FrozenBase base;
    base.input_dim_ = input_dim;
    base.feature_dim_ = feature_dim;
    base.projection_ = Matrix(input_dim, feature_dim);
    const double stddev = 1.0 / std::sqrt(static_cast<double>(input_dim));
    for (double& v : base.projection_.data) {
        v = rng.next_gaussian(0.0, stddev);
    }
    base.bias_.resize(feature_dim);
    for (double& v : base.bias_) {
        v = rng.next_gaussian(0.0, stddev);
    }
    return base;
}

Matrix FrozenBase::features(const Matrix& inputs) const {
    if (inputs.cols != input_dim_) {
        throw DimensionError("FrozenBase::features: input has " + std::to_string(inputs.cols) +
                             " columns, expected " + std::to_string(input_dim_));
    }
    Matrix out(inputs.rows, feature_dim_);
    for (std::size_t r = 0; r < inputs.rows; ++r) {
        for (std::size_t c = 0; c < feature_dim_; ++c) {
            double z = bias_[c];
            for (std::size_t k = 0; k < input_dim_; ++k) {
                z += inputs.at(r, k) * projection_.at(k, c);
            }
            out.at(r, c) = std::tanh(z);
        }
    }
    return out;
}

ClassifierHead::ClassifierHead(HeadShape shape, ParamVector params)
    : shape_(std::move(shape)), params_(std::move(params)) {
    if (shape_.widths.empty() || shape_.input_dim == 0) {
        throw ArgumentError("ClassifierHead: empty shape");
    }
    if (params_.size() != shape_.param_count()) {
        throw DimensionError("ClassifierHead: params length " + std::to_string(params_.size()) +
                             " does not match shape (" + std::to_string(shape_.param_count()) +
                             ")");
    }
}

ClassifierHead ClassifierHead::init(HeadShape shape, SeededRng& rng, double init_std) {
    std::vector<double> params(shape.param_count(), 0.0);
    std::size_t off = 0;
    std::size_t fan_in = shape.input_dim;
    for (std::size_t w : shape.widths) {
        // init_std <= 0 selects per-layer fan-in scaling; a small fixed std
        // starves multi-layer heads of gradient signal.
        const double stddev =
            init_std > 0.0 ? init_std : std::sqrt(2.0 / static_cast<double>(fan_in));
        for (std::size_t i = 0; i < fan_in * w; ++i) {
            params[off + i] = rng.next_gaussian(0.0, stddev);
        }
        off += fan_in * w + w;  // biases stay zero
        fan_in = w;
    }
    return ClassifierHead(std::move(shape), ParamVector(std::move(params)));
}

ClassifierHead ClassifierHead::with_params(ParamVector params) const {
    return ClassifierHead(shape_, std::move(params));
}

namespace {

// Forward pass keeping per-layer activations (activations[0] is the input).
// The last activation holds softmax probabilities.
std::vector<Matrix> forward_pass(const HeadShape& shape, const std::vector<double>& params,
                                 const Matrix& features) {
    if (features.cols != shape.input_dim) {
        throw DimensionError("head forward: feature dim " + std::to_string(features.cols) +
                             " != head fan-in " + std::to_string(shape.input_dim));
    }
    std::vector<Matrix> activations;
    activations.reserve(shape.widths.size() + 1);
    activations.push_back(features);
    std::size_t off = 0;
    for (std::size_t l = 0; l < shape.widths.size(); ++l) {
        const std::size_t fan_in = layer_fan_in(shape, l);
        const std::size_t fan_out = shape.widths[l];
        const Matrix& in = activations.back();
        Matrix z(in.rows, fan_out);
        const double* w = params.data() + off;
        const double* b = params.data() + off + fan_in * fan_out;
        for (std::size_t r = 0; r < in.rows; ++r) {
            for (std::size_t c = 0; c < fan_out; ++c) {
                double acc = b[c];
                for (std::size_t k = 0; k < fan_in; ++k) {
                    acc += in.at(r, k) * w[k * fan_out + c];
                }
                z.at(r, c) = acc;
            }
        }
        const bool last = (l + 1 == shape.widths.size());
        if (last) {
            // Stable softmax per row.
            for (std::size_t r = 0; r < z.rows; ++r) {
                double mx = z.at(r, 0);
                for (std::size_t c = 1; c < fan_out; ++c) mx = std::max(mx, z.at(r, c));
                double sum = 0.0;
                for (std::size_t c = 0; c < fan_out; ++c) {
                    z.at(r, c) = std::exp(z.at(r, c) - mx);
                    sum += z.at(r, c);
                }
                for (std::size_t c = 0; c < fan_out; ++c) z.at(r, c) /= sum;
            }
        } else {
            for (double& v : z.data) v = std::max(0.0, v);
        }
        activations.push_back(std::move(z));
        off += fan_in * fan_out + fan_out;
    }
    return activations;
}

}  // namespace

Matrix ClassifierHead::forward(const Matrix& features) const {
    return forward_pass(shape_, params_.values(), features).back();
}

double ClassifierHead::loss(const Matrix& features, const std::vector<int>& labels) const {
    const Matrix probs = forward(features);
    const std::size_t c_count = shape_.class_count();
    double total = 0.0;
    for (std::size_t r = 0; r < probs.rows; ++r) {
        const int y = labels[r];
        if (y < 0 || static_cast<std::size_t>(y) >= c_count) {
            throw ArgumentError("loss: label out of range at row " + std::to_string(r));
        }
        total += -std::log(std::max(probs.at(r, static_cast<std::size_t>(y)), 1e-300));
    }
    const double mean = total / static_cast<double>(probs.rows);
    if (!std::isfinite(mean)) {
        throw NumericError("loss: non-finite value");
    }
    return mean;
}

std::pair<double, ParamVector> ClassifierHead::loss_and_grad(const LabeledBatch& batch) const {
    if (batch.features.rows == 0) {
        throw ArgumentError("loss_and_grad: empty batch");
    }
    if (batch.features.rows != batch.labels.size()) {
        throw ArgumentError("loss_and_grad: feature/label count mismatch");
    }
    const std::size_t c_count = shape_.class_count();
    const std::size_t n = batch.features.rows;
    const auto activations = forward_pass(shape_, params_.values(), batch.features);
    const Matrix& probs = activations.back();

    double total = 0.0;
    for (std::size_t r = 0; r < n; ++r) {
        const int y = batch.labels[r];
        if (y < 0 || static_cast<std::size_t>(y) >= c_count) {
            throw ArgumentError("loss_and_grad: label out of range at row " + std::to_string(r));
        }
        total += -std::log(std::max(probs.at(r, static_cast<std::size_t>(y)), 1e-300));
    }
    const double mean_loss = total / static_cast<double>(n);
    if (!std::isfinite(mean_loss)) {
        throw NumericError("loss_and_grad: non-finite loss");
    }

    // dZ for the softmax/cross-entropy output layer.
    Matrix delta = probs;
    for (std::size_t r = 0; r < n; ++r) {
        delta.at(r, static_cast<std::size_t>(batch.labels[r])) -= 1.0;
    }
    for (double& v : delta.data) v /= static_cast<double>(n);

    std::vector<double> grad(params_.size(), 0.0);
    const std::vector<double>& params = params_.values();

    // Layer offsets for the backward sweep.
    std::vector<std::size_t> offsets(shape_.widths.size());
    {
        std::size_t off = 0;
        for (std::size_t l = 0; l < shape_.widths.size(); ++l) {
            offsets[l] = off;
            off += layer_fan_in(shape_, l) * shape_.widths[l] + shape_.widths[l];
        }
    }

    for (std::size_t li = shape_.widths.size(); li-- > 0;) {
        const std::size_t fan_in = layer_fan_in(shape_, li);
        const std::size_t fan_out = shape_.widths[li];
        const Matrix& in = activations[li];
        const std::size_t off = offsets[li];
        double* gw = grad.data() + off;
        double* gb = grad.data() + off + fan_in * fan_out;
        for (std::size_t r = 0; r < n; ++r) {
            for (std::size_t k = 0; k < fan_in; ++k) {
                const double a = in.at(r, k);
                if (a == 0.0) continue;
                for (std::size_t c = 0; c < fan_out; ++c) {
                    gw[k * fan_out + c] += a * delta.at(r, c);
                }
            }
            for (std::size_t c = 0; c < fan_out; ++c) {
                gb[c] += delta.at(r, c);
            }
        }
        if (li > 0) {
            // Propagate through the weights, then the ReLU mask.
            const double* w = params.data() + off;
            Matrix prev_delta(n, fan_in);
            for (std::size_t r = 0; r < n; ++r) {
                for (std::size_t k = 0; k < fan_in; ++k) {
                    double acc = 0.0;
                    for (std::size_t c = 0; c < fan_out; ++c) {
                        acc += delta.at(r, c) * w[k * fan_out + c];
                    }
                    prev_delta.at(r, k) = (in.at(r, k) > 0.0) ? acc : 0.0;
                }
            }
            delta = std::move(prev_delta);
        }
    }

    return {mean_loss, ParamVector(std::move(grad))};
}

std::pair<ParamVector, std::size_t> local_update(const ClassifierHead& head,
                                                 const Matrix& shard_features,
                                                 const std::vector<int>& shard_labels,
                                                 const LocalTrainConfig& cfg, SeededRng& rng) {
    const std::size_t n = shard_features.rows;
    if (n == 0 || shard_labels.size() != n) {
        throw ArgumentError("local_update: empty or inconsistent shard");
    }
    if (cfg.batch_size == 0) {
        throw ArgumentError("local_update: batch size must be positive");
    }
    ClassifierHead working = head;

    // Adam state lives for the duration of one local update.
    std::vector<double> m, v;
    if (cfg.optimizer == LocalOptimizer::Adam) {
        m.assign(head.params().size(), 0.0);
        v.assign(head.params().size(), 0.0);
    }
    const double beta1 = 0.9, beta2 = 0.999, adam_eps = 1e-8;
    std::size_t step = 0;

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);

    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        rng.shuffle(order);
        for (std::size_t start = 0; start < n; start += cfg.batch_size) {
            const std::size_t end = std::min(start + cfg.batch_size, n);
            LabeledBatch batch;
            batch.features = Matrix(end - start, shard_features.cols);
            batch.labels.resize(end - start);
            for (std::size_t i = start; i < end; ++i) {
                const std::size_t src = order[i];
                for (std::size_t c = 0; c < shard_features.cols; ++c) {
                    batch.features.at(i - start, c) = shard_features.at(src, c);
                }
                batch.labels[i - start] = shard_labels[src];
            }
            auto [loss, grad] = working.loss_and_grad(batch);
            (void)loss;
            if (cfg.optimizer == LocalOptimizer::Sgd) {
                working = working.with_params(pv_axpy(-cfg.eta, grad, working.params()));
            } else {
                ++step;
                std::vector<double> next(working.params().values());
                for (std::size_t i = 0; i < next.size(); ++i) {
                    m[i] = beta1 * m[i] + (1.0 - beta1) * grad[i];
                    v[i] = beta2 * v[i] + (1.0 - beta2) * grad[i] * grad[i];
                    const double mhat = m[i] / (1.0 - std::pow(beta1, static_cast<double>(step)));
                    const double vhat = v[i] / (1.0 - std::pow(beta2, static_cast<double>(step)));
                    next[i] -= cfg.eta * mhat / (std::sqrt(vhat) + adam_eps);
                }
                working = working.with_params(ParamVector(std::move(next)));
            }
        }
    }
    return {working.params(), n};
}

}  // namespace fedfta
