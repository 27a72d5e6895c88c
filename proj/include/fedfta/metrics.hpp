#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace fedfta {

// Actual-by-predicted count grid: rows = actual class, columns = predicted.
struct ConfusionMatrix {
    std::size_t class_count = 0;
    std::vector<std::int64_t> counts;  // class_count x class_count, row-major

    explicit ConfusionMatrix(std::size_t c)
        : class_count(c), counts(c * c, 0) {}

    std::int64_t& at(std::size_t actual, std::size_t predicted) {
        return counts[actual * class_count + predicted];
    }
    std::int64_t at(std::size_t actual, std::size_t predicted) const {
        return counts[actual * class_count + predicted];
    }
    std::int64_t total() const;
};

struct ClassMetrics {
    std::optional<double> precision;
    std::optional<double> recall;
    std::optional<double> specificity;
    std::optional<double> f1;
};

// Zero-denominator metrics are left unset rather than forced to 0 or 1;
// macro averages skip them and report how many were skipped.
struct MetricReport {
    double accuracy = 0.0;
    std::optional<double> precision;
    std::optional<double> recall;
    std::optional<double> specificity;
    std::optional<double> f1;
    std::string averaging;  // "binary" or "macro"
    std::vector<ClassMetrics> per_class;
    int undefined_excluded = 0;
};

ConfusionMatrix confusion_from_predictions(const std::vector<int>& actual,
                                           const std::vector<int>& predicted,
                                           std::size_t class_count);

// TP/FN/FP/TN read with the chosen positive class; 2x2 matrices only.
MetricReport binary_metrics(const ConfusionMatrix& cm, int positive_class);

// accuracy = trace/total; other metrics are unweighted (macro) means of
// per-class one-vs-rest values, skipping undefined entries.
MetricReport multiclass_metrics(const ConfusionMatrix& cm);

}  // namespace fedfta
