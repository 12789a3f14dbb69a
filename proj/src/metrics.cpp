#include "packdet/metrics.hpp"

#include "packdet/error.hpp"
#include "packdet/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace packdet {

std::vector<std::vector<size_t>> kfold_indices(size_t n, size_t k, uint64_t seed) {
    if (k < 1 || k > n) raise(Errc::bad_k, "kfold_indices: need 1 <= k <= n");
    std::vector<size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    Rng rng(seed);
    rng.shuffle(order);

    std::vector<std::vector<size_t>> folds(k);
    size_t base = n / k, extra = n % k, pos = 0;
    for (size_t f = 0; f < k; ++f) {
        size_t len = base + (f < extra ? 1 : 0);
        folds[f].assign(order.begin() + static_cast<ptrdiff_t>(pos),
                        order.begin() + static_cast<ptrdiff_t>(pos + len));
        pos += len;
    }
    return folds;
}

double fscore(double precision, double recall) {
    double s = precision + recall;
    return s > 0 ? 2.0 * precision * recall / s : 0.0;
}

MetricsReport compute_metrics(std::span<const int> preds, std::span<const int> labels) {
    if (preds.size() != labels.size() || preds.empty()) {
        raise(Errc::length_mismatch, "compute_metrics: predictions and labels must align");
    }
    MetricsReport m;
    for (size_t i = 0; i < preds.size(); ++i) {
        bool p = preds[i] == 1, a = labels[i] == 1;
        if (p && a) ++m.tp;
        else if (p && !a) ++m.fp;
        else if (!p && a) ++m.fn;
        else ++m.tn;
    }
    const double n = static_cast<double>(m.total());
    const double n_p = static_cast<double>(m.tp + m.fn);
    const double n_np = static_cast<double>(m.tn + m.fp);

    m.precision_p_defined = m.tp + m.fp > 0;
    m.precision_p = m.precision_p_defined
                        ? static_cast<double>(m.tp) / static_cast<double>(m.tp + m.fp)
                        : 0.0;
    m.precision_np_defined = m.tn + m.fn > 0;
    m.precision_np = m.precision_np_defined
                         ? static_cast<double>(m.tn) / static_cast<double>(m.tn + m.fn)
                         : 0.0;
    m.recall_p = n_p > 0 ? static_cast<double>(m.tp) / n_p : 0.0;
    m.recall_np = n_np > 0 ? static_cast<double>(m.tn) / n_np : 0.0;
    m.fscore_p = fscore(m.precision_p, m.recall_p);
    m.fscore_p_defined = m.precision_p + m.recall_p > 0;
    m.fscore_np = fscore(m.precision_np, m.recall_np);
    m.fscore_np_defined = m.precision_np + m.recall_np > 0;

    m.precision_wa = (m.precision_p * n_p + m.precision_np * n_np) / n;
    m.recall_wa = (m.recall_p * n_p + m.recall_np * n_np) / n;
    m.fscore_wa = (m.fscore_p * n_p + m.fscore_np * n_np) / n;
    m.accuracy = static_cast<double>(m.tp + m.tn) / n;
    return m;
}

MetricsReport mean_metrics(const std::vector<MetricsReport>& reports) {
    if (reports.empty()) raise(Errc::bad_argument, "mean_metrics: no reports");
    MetricsReport out;
    for (const MetricsReport& r : reports) {
        out.tp += r.tp;
        out.fp += r.fp;
        out.tn += r.tn;
        out.fn += r.fn;
        out.precision_p += r.precision_p;
        out.precision_np += r.precision_np;
        out.recall_p += r.recall_p;
        out.recall_np += r.recall_np;
        out.fscore_p += r.fscore_p;
        out.fscore_np += r.fscore_np;
        out.precision_wa += r.precision_wa;
        out.recall_wa += r.recall_wa;
        out.fscore_wa += r.fscore_wa;
        out.accuracy += r.accuracy;
        out.precision_p_defined = out.precision_p_defined && r.precision_p_defined;
        out.precision_np_defined = out.precision_np_defined && r.precision_np_defined;
        out.fscore_p_defined = out.fscore_p_defined && r.fscore_p_defined;
        out.fscore_np_defined = out.fscore_np_defined && r.fscore_np_defined;
    }
    const double k = static_cast<double>(reports.size());
    out.precision_p /= k;
    out.precision_np /= k;
    out.recall_p /= k;
    out.recall_np /= k;
    out.fscore_p /= k;
    out.fscore_np /= k;
    out.precision_wa /= k;
    out.recall_wa /= k;
    out.fscore_wa /= k;
    out.accuracy /= k;
    return out;
}

std::array<double, 3> fit_decay(std::span<const std::pair<double, double>> points) {
    if (points.size() < 3) raise(Errc::too_few_points, "fit_decay needs at least 3 points");

    // Center and scale the abscissa before solving the normal equations so
    // that second-scale time values stay well conditioned.
    double t_mean = 0.0;
    for (auto& [t, f] : points) t_mean += t;
    t_mean /= static_cast<double>(points.size());
    double t_scale = 0.0;
    for (auto& [t, f] : points) t_scale = std::max(t_scale, std::abs(t - t_mean));
    if (t_scale == 0.0) t_scale = 1.0;

    double s[3][3] = {};
    double rhs[3] = {};
    for (auto& [t, f] : points) {
        double u = (t - t_mean) / t_scale;
        double phi[3] = {u * u, u, 1.0};
        for (int i = 0; i < 3; ++i) {
            for (int j = 0; j < 3; ++j) s[i][j] += phi[i] * phi[j];
            rhs[i] += phi[i] * f;
        }
    }

    // 3x3 Gaussian elimination with partial pivoting
    int piv[3] = {0, 1, 2};
    for (int col = 0; col < 3; ++col) {
        int best = col;
        for (int r = col + 1; r < 3; ++r) {
            if (std::abs(s[piv[r]][col]) > std::abs(s[piv[best]][col])) best = r;
        }
        std::swap(piv[col], piv[best]);
        double d = s[piv[col]][col];
        if (d == 0.0) raise(Errc::bad_argument, "fit_decay: singular normal equations");
        for (int r = col + 1; r < 3; ++r) {
            double factor = s[piv[r]][col] / d;
            for (int c = col; c < 3; ++c) s[piv[r]][c] -= factor * s[piv[col]][c];
            rhs[piv[r]] -= factor * rhs[piv[col]];
        }
    }
    double sol[3];
    for (int col = 2; col >= 0; --col) {
        double v = rhs[piv[col]];
        for (int c = col + 1; c < 3; ++c) v -= s[piv[col]][c] * sol[c];
        sol[col] = v / s[piv[col]][col];
    }

    // back-substitute u = (t - mu) / s into a'u^2 + b'u + c'
    double ap = sol[0], bp = sol[1], cp = sol[2];
    double a = ap / (t_scale * t_scale);
    double b = bp / t_scale - 2.0 * ap * t_mean / (t_scale * t_scale);
    double c = cp - bp * t_mean / t_scale + ap * t_mean * t_mean / (t_scale * t_scale);
    return {a, b, c};
}

std::optional<double> uptime(const std::array<double, 3>& coeffs, double threshold,
                             double horizon_seconds) {
    const double a = coeffs[0], b = coeffs[1];
    const double g0 = coeffs[2] - threshold;
    auto within = [&](double t) -> std::optional<double> {
        if (t <= horizon_seconds) return t;
        return std::nullopt;
    };

    if (g0 < 0) return 0.0;
    if (a == 0.0) {
        if (b >= 0.0) return std::nullopt;
        return within(g0 / -b);
    }
    double disc = b * b - 4.0 * a * g0;
    if (disc < 0) {
        return std::nullopt; // no real crossing; sign fixed by a, and g(0) >= 0
    }
    double sq = std::sqrt(disc);
    double q = -0.5 * (b + (b >= 0 ? sq : -sq));
    double r1 = q / a;
    double r2 = q != 0.0 ? g0 / q : r1;
    if (r1 > r2) std::swap(r1, r2);

    if (a > 0) {
        // below threshold only between the roots
        if (r2 <= 0) return std::nullopt;
        return within(std::max(r1, 0.0));
    }
    // opens downward: g(0) >= 0 puts t = 0 between the roots
    return within(std::max(r2, 0.0));
}

double economics_ratio(double uptime_seconds, double train_seconds) {
    if (train_seconds <= 0) raise(Errc::zero_train_time, "training time must be positive");
    return uptime_seconds / train_seconds;
}

} // namespace packdet
