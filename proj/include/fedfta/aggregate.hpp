#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "fedfta/param_vector.hpp"

namespace fedfta {

// One client's contribution to a round.
struct LocalUpdate {
    std::uint64_t client_id = 0;
    ParamVector head;       // W_k^{L,H}
    std::size_t n_k = 0;    // sample count, >= 1
};

struct GssConfig {
    double lower = 0.0;
    double upper = 2.0;
    double tolerance = 0.01;
    std::size_t max_iterations = 50;
    // Classic GSS reuses the surviving probe and evaluates one new point per
    // iteration; default off, both probes evaluated fresh each iteration.
    bool reuse_probes = false;
};

struct GssEval {
    double x = 0.0;
    double value = 0.0;
};

struct GssResult {
    double x_star = 0.0;
    std::size_t iterations = 0;
    std::vector<GssEval> evaluations;
    // Interval width before iteration 0, then after each iteration.
    std::vector<double> widths;
};

struct AggregationResult {
    ParamVector new_head;  // W_{t+1}^{G,H}
    double sigma = 1.0;
    std::vector<GssEval> evaluations;
    std::size_t iterations = 0;
};

// Sample-count-weighted mean of client heads; equals the sigma=1 case of the
// fine-tuned update.
ParamVector fedavg_aggregate(const ParamVector& global_head,
                             const std::vector<LocalUpdate>& updates);

// Golden-section minimization over [lower, upper]: probes
// x1 = upper - phi*(upper - lower), x2 = lower + phi*(upper - lower) with
// phi = (sqrt(5)-1)/2; if f(x1) < f(x2) the upper bound moves to x2,
// otherwise the lower bound moves to x1. Stops when the interval width is
// within tolerance or max_iterations is hit; returns the midpoint.
GssResult gss_minimize(const std::function<double(double)>& objective, const GssConfig& cfg);

// Fine-tuned aggregation: Delta = weighted mean of (head_k - global), the
// objective is validation loss of global + x*Delta, and sigma is found by
// golden-section search.
AggregationResult fta_aggregate(const ParamVector& global_head,
                                const std::vector<LocalUpdate>& updates,
                                const std::function<double(const ParamVector&)>& evaluate_loss,
                                const GssConfig& cfg);

}  // namespace fedfta
