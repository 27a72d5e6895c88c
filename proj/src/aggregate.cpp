#include "fedfta/aggregate.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "fedfta/errors.hpp"

namespace fedfta {

namespace {

constexpr double kGoldenRatio = 0.61803398874989484820;  // (sqrt(5)-1)/2

std::vector<LocalUpdate> sorted_by_client(std::vector<LocalUpdate> updates) {
    std::stable_sort(updates.begin(), updates.end(),
                     [](const LocalUpdate& a, const LocalUpdate& b) {
                         return a.client_id < b.client_id;
                     });
    return updates;
}

void validate_updates(const ParamVector& global_head, const std::vector<LocalUpdate>& updates) {
    if (updates.empty()) {
        throw ArgumentError("aggregate: no updates");
    }
    for (const LocalUpdate& u : updates) {
        if (u.head.size() != global_head.size()) {
            throw DimensionError("aggregate: update from client " + std::to_string(u.client_id) +
                                 " has mismatched head length");
        }
        if (u.n_k == 0) {
            throw ArgumentError("aggregate: client " + std::to_string(u.client_id) +
                                " reported n_k = 0");
        }
    }
}

double checked_eval(const std::function<double(double)>& f, double x) {
    const double v = f(x);
    if (!std::isfinite(v)) {
        throw NumericError("gss_minimize: objective is not finite at x = " + std::to_string(x));
    }
    return v;
}

}  // namespace

ParamVector fedavg_aggregate(const ParamVector& global_head,
                             const std::vector<LocalUpdate>& updates) {
    validate_updates(global_head, updates);
    const auto sorted = sorted_by_client(updates);
    std::vector<ParamVector> heads;
    std::vector<double> weights;
    heads.reserve(sorted.size());
    weights.reserve(sorted.size());
    for (const LocalUpdate& u : sorted) {
        heads.push_back(u.head);
        weights.push_back(static_cast<double>(u.n_k));
    }
    return pv_weighted_mean(heads, weights);
}

GssResult gss_minimize(const std::function<double(double)>& objective, const GssConfig& cfg) {
    if (!(cfg.lower < cfg.upper)) {
        throw ArgumentError("gss_minimize: lower bound must be below upper bound");
    }
    if (!(cfg.tolerance > 0.0) || cfg.tolerance >= cfg.upper - cfg.lower) {
        throw ArgumentError("gss_minimize: tolerance must be in (0, upper - lower)");
    }
    double lo = cfg.lower;
    double hi = cfg.upper;
    GssResult result;
    result.widths.push_back(hi - lo);

    bool have_cached = false;
    bool cached_is_left = false;
    double cached_value = 0.0;

    while (hi - lo > cfg.tolerance && result.iterations < cfg.max_iterations) {
        const double width = hi - lo;
        const double x1 = hi - kGoldenRatio * width;
        const double x2 = lo + kGoldenRatio * width;
        double f1, f2;
        if (cfg.reuse_probes && have_cached) {
            if (cached_is_left) {
                f1 = cached_value;
                f2 = checked_eval(objective, x2);
                result.evaluations.push_back({x2, f2});
            } else {
                f2 = cached_value;
                f1 = checked_eval(objective, x1);
                result.evaluations.push_back({x1, f1});
            }
        } else {
            f1 = checked_eval(objective, x1);
            f2 = checked_eval(objective, x2);
            result.evaluations.push_back({x1, f1});
            result.evaluations.push_back({x2, f2});
        }
        if (f1 < f2) {
            hi = x2;
            // x1 becomes the right probe of the shrunken interval.
            have_cached = true;
            cached_is_left = false;
            cached_value = f1;
        } else {
            lo = x1;
            have_cached = true;
            cached_is_left = true;
            cached_value = f2;
        }
        result.iterations += 1;
        result.widths.push_back(hi - lo);
    }
    result.x_star = 0.5 * (lo + hi);
    return result;
}

AggregationResult fta_aggregate(const ParamVector& global_head,
                                const std::vector<LocalUpdate>& updates,
                                const std::function<double(const ParamVector&)>& evaluate_loss,
                                const GssConfig& cfg) {
    validate_updates(global_head, updates);
    const auto sorted = sorted_by_client(updates);

    // Delta = sum_k (n_k / N_total) * (head_k - global).
    std::vector<ParamVector> deltas;
    std::vector<double> weights;
    deltas.reserve(sorted.size());
    weights.reserve(sorted.size());
    for (const LocalUpdate& u : sorted) {
        deltas.push_back(pv_axpy(-1.0, global_head, u.head));
        weights.push_back(static_cast<double>(u.n_k));
    }
    const ParamVector delta = pv_weighted_mean(deltas, weights);

    const auto objective = [&](double x) {
        return evaluate_loss(pv_axpy(x, delta, global_head));
    };
    GssResult gss = gss_minimize(objective, cfg);

    AggregationResult result;
    result.sigma = gss.x_star;
    result.new_head = pv_axpy(gss.x_star, delta, global_head);
    result.evaluations = std::move(gss.evaluations);
    result.iterations = gss.iterations;
    return result;
}

}  // namespace fedfta
