#pragma once

#include "packdet/classifiers.hpp"
#include "packdet/dataset.hpp"
#include "packdet/metrics.hpp"

#include <array>
#include <optional>
#include <vector>

namespace packdet {

struct PeriodMetrics {
    int period_id = 0;
    double t_mid_seconds = 0.0; // period mid-point, measured from training end
    MetricsReport metrics;
};

struct ThresholdEconomics {
    double threshold = 0.0;
    std::optional<double> uptime_seconds; // nullopt = threshold never reached
    std::optional<double> ratio;
};

struct DriftReport {
    MetricsReport baseline;
    std::vector<PeriodMetrics> periods;
    std::array<double, 3> decay_coeffs{}; // weighted F-score ~ a t^2 + b t + c
    std::vector<ThresholdEconomics> economics;
    double train_seconds = 0.0;
};

inline constexpr double DRIFT_DEFAULT_HORIZON_SECONDS = 1.0e9;

/// Evaluates a trained model on the baseline set and on chronologically
/// later periods without retraining, fits a quadratic to the weighted
/// F-scores (baseline at t = 0, periods at their midpoints measured from the
/// training end) and derives per-threshold uptimes and uptime/train-time
/// ratios. Raises Error{time_order} when a period starts at or before the
/// baseline's last timestamp.
DriftReport chronological_eval(const Model& m, const Dataset& baseline,
                               const std::vector<Dataset>& periods,
                               const std::vector<double>& thresholds = {0.92, 0.95, 0.97},
                               double horizon_seconds = DRIFT_DEFAULT_HORIZON_SECONDS);

} // namespace packdet
