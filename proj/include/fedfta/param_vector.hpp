#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace fedfta {

// Flat weight container for classifier heads and model deltas. Entries are
// always finite; length is fixed at construction. Immutable after
// construction and safe to share across threads.
class ParamVector {
public:
    ParamVector() = default;
    explicit ParamVector(std::vector<double> values);

    static ParamVector zeros(std::size_t n);

    std::size_t size() const { return values_.size(); }
    double operator[](std::size_t i) const { return values_[i]; }
    const std::vector<double>& values() const { return values_; }

    bool operator==(const ParamVector& other) const = default;

private:
    std::vector<double> values_;
};

// result[i] = a * x[i] + y[i]. Lengths must match; result must stay finite.
ParamVector pv_axpy(double a, const ParamVector& x, const ParamVector& y);

// Normalized weighted mean, summed in ascending input-index order for
// determinism. Callers pass raw sample counts; weights are normalized here.
ParamVector pv_weighted_mean(std::span<const ParamVector> vectors,
                             std::span<const double> weights);

// true iff max_i |x[i] - y[i]| <= tol.
bool pv_allclose(const ParamVector& x, const ParamVector& y, double tol);

}  // namespace fedfta
