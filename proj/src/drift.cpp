#include "packdet/drift.hpp"

#include "packdet/error.hpp"

namespace packdet {

DriftReport chronological_eval(const Model& m, const Dataset& baseline,
                               const std::vector<Dataset>& periods,
                               const std::vector<double>& thresholds, double horizon_seconds) {
    if (baseline.size() == 0) raise(Errc::empty_matrix, "chronological_eval: empty baseline");
    const int64_t train_end = baseline.max_timestamp();

    DriftReport report;
    report.train_seconds = m.train_seconds;
    report.baseline = compute_metrics(predict_batch(m, baseline.x), baseline.labels);

    std::vector<std::pair<double, double>> curve;
    curve.push_back({0.0, report.baseline.fscore_wa});
    int id = 0;
    for (const Dataset& period : periods) {
        ++id;
        if (period.size() == 0) raise(Errc::empty_matrix, "chronological_eval: empty period");
        if (period.min_timestamp() <= train_end) {
            raise(Errc::time_order,
                  "period " + std::to_string(id) + " starts before the training data ends");
        }
        PeriodMetrics pm;
        pm.period_id = id;
        double mid = (static_cast<double>(period.min_timestamp()) +
                      static_cast<double>(period.max_timestamp())) /
                     2.0;
        pm.t_mid_seconds = mid - static_cast<double>(train_end);
        pm.metrics = compute_metrics(predict_batch(m, period.x), period.labels);
        curve.push_back({pm.t_mid_seconds, pm.metrics.fscore_wa});
        report.periods.push_back(std::move(pm));
    }

    if (curve.size() >= 3) {
        report.decay_coeffs = fit_decay(curve);
        for (double threshold : thresholds) {
            ThresholdEconomics e;
            e.threshold = threshold;
            e.uptime_seconds = uptime(report.decay_coeffs, threshold, horizon_seconds);
            if (e.uptime_seconds && m.train_seconds > 0) {
                e.ratio = economics_ratio(*e.uptime_seconds, m.train_seconds);
            }
            report.economics.push_back(e);
        }
    }
    return report;
}

} // namespace packdet
