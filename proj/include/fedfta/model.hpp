#pragma once

#include <cstddef>
#include <utility>
#include <vector>

#include "fedfta/param_vector.hpp"
#include "fedfta/rng.hpp"

namespace fedfta {

// Minimal row-major dense matrix. No tensor algebra, just what the models need.
struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}

    double& at(std::size_t r, std::size_t c) { return data[r * cols + c]; }
    double at(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
};

// Frozen random feature extractor standing in for a pre-trained base model.
// Entries are drawn once from a seeded Gaussian with std 1/sqrt(input_dim)
// and never modified; features pass through tanh, so they lie in (-1, 1).
class FrozenBase {
public:
    static FrozenBase create(std::size_t input_dim, std::size_t feature_dim, SeededRng& rng);

    // activation(inputs * projection + bias), row per sample.
    Matrix features(const Matrix& inputs) const;

    std::size_t input_dim() const { return input_dim_; }
    std::size_t feature_dim() const { return feature_dim_; }
    const Matrix& projection() const { return projection_; }
    const std::vector<double>& bias() const { return bias_; }

private:
    std::size_t input_dim_ = 0;
    std::size_t feature_dim_ = 0;
    Matrix projection_;  // input_dim x feature_dim
    std::vector<double> bias_;
};

// Layer geometry of the classifier head: input width, hidden widths, then the
// class count as the final entry.
struct HeadShape {
    std::size_t input_dim = 0;
    std::vector<std::size_t> widths;  // hidden widths..., class count

    std::size_t class_count() const { return widths.back(); }
    std::size_t param_count() const;
};

struct LabeledBatch {
    Matrix features;
    std::vector<int> labels;
};

// Trainable dense softmax classifier. Parameters are a flat ParamVector in a
// canonical order: layer by layer, row-major weight matrix (fan_in x fan_out)
// followed by the layer's biases. ReLU hidden activations, softmax output.
class ClassifierHead {
public:
    ClassifierHead(HeadShape shape, ParamVector params);

    // Seeded Gaussian weights, zero biases. init_std <= 0 picks a per-layer
    // sqrt(2/fan_in) scale; a positive value fixes the std for every layer.
    static ClassifierHead init(HeadShape shape, SeededRng& rng, double init_std = 0.0);

    // Row-wise class probabilities; each row sums to 1.
    Matrix forward(const Matrix& features) const;

    // Mean cross-entropy over the batch and its gradient, by backpropagation.
    // The gradient uses the same flattening order as params().
    std::pair<double, ParamVector> loss_and_grad(const LabeledBatch& batch) const;

    // Mean cross-entropy only (validation objective).
    double loss(const Matrix& features, const std::vector<int>& labels) const;

    ClassifierHead with_params(ParamVector params) const;

    const HeadShape& shape() const { return shape_; }
    const ParamVector& params() const { return params_; }

private:
    HeadShape shape_;
    ParamVector params_;
};

enum class LocalOptimizer { Sgd, Adam };

struct LocalTrainConfig {
    std::size_t epochs = 1;
    double eta = 0.001;
    std::size_t batch_size = 32;
    LocalOptimizer optimizer = LocalOptimizer::Sgd;
};

// Client-side training loop: E epochs of mini-batch gradient steps over a
// seeded shuffle of the shard. Returns the final head parameters and the
// shard size n_k. The input head is not mutated.
std::pair<ParamVector, std::size_t> local_update(const ClassifierHead& head,
                                                 const Matrix& shard_features,
                                                 const std::vector<int>& shard_labels,
                                                 const LocalTrainConfig& cfg, SeededRng& rng);

}  // namespace fedfta
