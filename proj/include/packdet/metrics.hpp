#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace packdet {

/// Confusion counts and derived per-class/weighted metrics. "packed"
/// (label 1) is the positive class. Undefined ratios (empty denominator)
/// report 0 with the matching *_defined flag cleared.
struct MetricsReport {
    size_t tp = 0, fp = 0, tn = 0, fn = 0;
    double precision_p = 0, precision_np = 0;
    double recall_p = 0, recall_np = 0;
    double fscore_p = 0, fscore_np = 0;
    double precision_wa = 0, recall_wa = 0, fscore_wa = 0;
    double accuracy = 0;
    bool precision_p_defined = true, precision_np_defined = true;
    bool fscore_p_defined = true, fscore_np_defined = true;

    size_t total() const { return tp + fp + tn + fn; }
};

/// k disjoint test index sets partitioning 0..n-1 with sizes differing by at
/// most one; the shuffle is seeded. Raises Error{bad_k} unless 2 <= k <= n
/// (k == 1 is allowed for a single-fold holdout of everything).
std::vector<std::vector<size_t>> kfold_indices(size_t n, size_t k, uint64_t seed);

/// Raises Error{length_mismatch} when sizes differ or are zero.
MetricsReport compute_metrics(std::span<const int> preds, std::span<const int> labels);

/// F-score from a precision/recall pair; 0 when p + r == 0.
double fscore(double precision, double recall);

/// Field-wise mean of per-fold reports; confusion counts are summed.
MetricsReport mean_metrics(const std::vector<MetricsReport>& reports);

/// Least-squares quadratic fit f(t) = a t^2 + b t + c, returned as {a, b, c}.
/// Exact on points that lie on a quadratic. Raises Error{too_few_points}
/// for fewer than 3 points.
std::array<double, 3> fit_decay(std::span<const std::pair<double, double>> points);

/// Smallest t >= 0 where the fitted curve drops below the threshold, by
/// closed-form root selection; nullopt when the curve stays at or above the
/// threshold across [0, horizon].
std::optional<double> uptime(const std::array<double, 3>& coeffs, double threshold,
                             double horizon_seconds);

/// Uptime / training time. Raises Error{zero_train_time} when train <= 0.
double economics_ratio(double uptime_seconds, double train_seconds);

} // namespace packdet
