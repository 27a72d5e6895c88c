#include "fedfta/param_vector.hpp"

#include <cmath>
#include <string>

#include "fedfta/errors.hpp"

namespace fedfta {

ParamVector::ParamVector(std::vector<double> values) : values_(std::move(values)) {
    for (std::size_t i = 0; i < values_.size(); ++i) {
        if (!std::isfinite(values_[i])) {
            throw NumericError("ParamVector entry " + std::to_string(i) + " is not finite");
        }
    }
}

ParamVector ParamVector::zeros(std::size_t n) {
    return ParamVector(std::vector<double>(n, 0.0));
}

ParamVector pv_axpy(double a, const ParamVector& x, const ParamVector& y) {
    if (x.size() != y.size()) {
        throw DimensionError("pv_axpy: length mismatch (" + std::to_string(x.size()) + " vs " +
                             std::to_string(y.size()) + ")");
    }
    if (!std::isfinite(a)) {
        throw NumericError("pv_axpy: scale is not finite");
    }
    std::vector<double> out(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        out[i] = a * x[i] + y[i];
    }
    return ParamVector(std::move(out));
}

ParamVector pv_weighted_mean(std::span<const ParamVector> vectors,
                             std::span<const double> weights) {
    if (vectors.empty()) {
        throw ArgumentError("pv_weighted_mean: empty vector list");
    }
    if (vectors.size() != weights.size()) {
        throw ArgumentError("pv_weighted_mean: vector/weight count mismatch");
    }
    const std::size_t n = vectors[0].size();
    double total = 0.0;
    for (std::size_t i = 0; i < vectors.size(); ++i) {
        if (vectors[i].size() != n) {
            throw DimensionError("pv_weighted_mean: vector " + std::to_string(i) +
                                 " length mismatch");
        }
        if (weights[i] < 0.0) {
            throw ArgumentError("pv_weighted_mean: negative weight at " + std::to_string(i));
        }
        total += weights[i];
    }
    if (total <= 0.0) {
        throw ArgumentError("pv_weighted_mean: weights sum to zero");
    }
    std::vector<double> out(n, 0.0);
    for (std::size_t i = 0; i < vectors.size(); ++i) {
        const double w = weights[i] / total;
        for (std::size_t j = 0; j < n; ++j) {
            out[j] += w * vectors[i][j];
        }
    }
    return ParamVector(std::move(out));
}

bool pv_allclose(const ParamVector& x, const ParamVector& y, double tol) {
    if (x.size() != y.size()) {
        throw DimensionError("pv_allclose: length mismatch");
    }
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (std::abs(x[i] - y[i]) > tol) return false;
    }
    return true;
}

}  // namespace fedfta
