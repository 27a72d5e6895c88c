#include "fedfta/metrics.hpp"

#include <numeric>
#include <string>

#include "fedfta/errors.hpp"

namespace fedfta {

namespace {

std::optional<double> ratio(std::int64_t num, std::int64_t den) {
    if (den == 0) return std::nullopt;
    return static_cast<double>(num) / static_cast<double>(den);
}

std::optional<double> f1_of(const std::optional<double>& p, const std::optional<double>& r) {
    if (!p || !r) return std::nullopt;
    if (*p + *r == 0.0) return std::nullopt;
    return 2.0 * (*p * *r) / (*p + *r);
}

ClassMetrics one_vs_rest(const ConfusionMatrix& cm, std::size_t cls) {
    std::int64_t tp = cm.at(cls, cls);
    std::int64_t fn = 0, fp = 0, tn = 0;
    for (std::size_t a = 0; a < cm.class_count; ++a) {
        for (std::size_t p = 0; p < cm.class_count; ++p) {
            if (a == cls && p != cls) fn += cm.at(a, p);
            if (a != cls && p == cls) fp += cm.at(a, p);
            if (a != cls && p != cls) tn += cm.at(a, p);
        }
    }
    ClassMetrics m;
    m.precision = ratio(tp, tp + fp);
    m.recall = ratio(tp, tp + fn);
    m.specificity = ratio(tn, tn + fp);
    m.f1 = f1_of(m.precision, m.recall);
    return m;
}

}  // namespace

std::int64_t ConfusionMatrix::total() const {
    return std::accumulate(counts.begin(), counts.end(), std::int64_t{0});
}

ConfusionMatrix confusion_from_predictions(const std::vector<int>& actual,
                                           const std::vector<int>& predicted,
                                           std::size_t class_count) {
    if (actual.size() != predicted.size()) {
        throw ArgumentError("confusion_from_predictions: length mismatch");
    }
    if (class_count < 2) {
        throw ArgumentError("confusion_from_predictions: need at least 2 classes");
    }
    ConfusionMatrix cm(class_count);
    for (std::size_t i = 0; i < actual.size(); ++i) {
        const int a = actual[i], p = predicted[i];
        if (a < 0 || p < 0 || static_cast<std::size_t>(a) >= class_count ||
            static_cast<std::size_t>(p) >= class_count) {
            throw ArgumentError("confusion_from_predictions: label out of range at index " +
                                std::to_string(i));
        }
        cm.at(static_cast<std::size_t>(a), static_cast<std::size_t>(p)) += 1;
    }
    return cm;
}

MetricReport binary_metrics(const ConfusionMatrix& cm, int positive_class) {
    if (cm.class_count != 2) {
        throw ArgumentError("binary_metrics: confusion matrix must be 2x2");
    }
    if (positive_class != 0 && positive_class != 1) {
        throw ArgumentError("binary_metrics: positive class must be 0 or 1");
    }
    if (cm.total() == 0) {
        throw ArgumentError("binary_metrics: empty confusion matrix");
    }
    const std::size_t pos = static_cast<std::size_t>(positive_class);
    const std::size_t neg = 1 - pos;
    const std::int64_t tp = cm.at(pos, pos);
    const std::int64_t fn = cm.at(pos, neg);
    const std::int64_t fp = cm.at(neg, pos);
    const std::int64_t tn = cm.at(neg, neg);

    MetricReport report;
    report.averaging = "binary";
    report.accuracy = static_cast<double>(tp + tn) / static_cast<double>(tp + tn + fp + fn);
    report.precision = ratio(tp, tp + fp);
    report.recall = ratio(tp, tp + fn);
    report.specificity = ratio(tn, tn + fp);
    report.f1 = f1_of(report.precision, report.recall);
    return report;
}

MetricReport multiclass_metrics(const ConfusionMatrix& cm) {
    if (cm.class_count < 2) {
        throw ArgumentError("multiclass_metrics: need at least 2 classes");
    }
    const std::int64_t total = cm.total();
    if (total == 0) {
        throw ArgumentError("multiclass_metrics: empty confusion matrix");
    }
    MetricReport report;
    report.averaging = "macro";
    std::int64_t diag = 0;
    for (std::size_t c = 0; c < cm.class_count; ++c) diag += cm.at(c, c);
    report.accuracy = static_cast<double>(diag) / static_cast<double>(total);

    double sum_p = 0, sum_r = 0, sum_s = 0;
    int n_p = 0, n_r = 0, n_s = 0;
    for (std::size_t c = 0; c < cm.class_count; ++c) {
        ClassMetrics m = one_vs_rest(cm, c);
        if (m.precision) { sum_p += *m.precision; ++n_p; } else ++report.undefined_excluded;
        if (m.recall) { sum_r += *m.recall; ++n_r; } else ++report.undefined_excluded;
        if (m.specificity) { sum_s += *m.specificity; ++n_s; } else ++report.undefined_excluded;
        report.per_class.push_back(std::move(m));
    }
    if (n_p > 0) report.precision = sum_p / n_p;
    if (n_r > 0) report.recall = sum_r / n_r;
    if (n_s > 0) report.specificity = sum_s / n_s;
    // The report's f1 is always the harmonic mean of its own precision and
    // recall fields; per-class f1 values are kept in per_class.
    report.f1 = f1_of(report.precision, report.recall);
    return report;
}

}  // namespace fedfta
