#include "packdet/error.hpp"

#include "classifiers_impl.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace packdet {

std::array<double, 2> bayes_posterior(const NbcState& nb, std::span<const double> x) {
    const Matrix& a = nb.gaussian ? nb.mean : nb.log_p;
    if (a.rows != 2 || a.cols == 0) raise(Errc::unfitted_model, "bayes_posterior: no likelihoods");
    if (x.size() != a.cols) raise(Errc::dimension_mismatch, "bayes_posterior dimension mismatch");

    std::array<double, 2> score{nb.log_prior[0], nb.log_prior[1]};
    for (int k = 0; k < 2; ++k) {
        if (nb.log_prior[k] == -std::numeric_limits<double>::infinity()) {
            score[k] = -std::numeric_limits<double>::infinity();
            continue;
        }
        for (size_t c = 0; c < x.size(); ++c) {
            if (nb.gaussian) {
                double var = nb.var.at(static_cast<size_t>(k), c);
                double d = x[c] - nb.mean.at(static_cast<size_t>(k), c);
                score[k] += -0.5 * std::log(2.0 * std::numbers::pi * var) - d * d / (2.0 * var);
            } else {
                bool on = x[c] > 0.0;
                score[k] += on ? nb.log_p.at(static_cast<size_t>(k), c)
                               : nb.log_1mp.at(static_cast<size_t>(k), c);
            }
        }
    }
    return score;
}

namespace detail {

KnnState fit_knn(const FitContext&, const Matrix& x, const std::vector<int>& y) {
    return {x, y};
}

int predict_knn(const KnnState& s, int k, std::span<const double> x) {
    if (x.size() != s.x.cols) raise(Errc::dimension_mismatch, "knn dimension mismatch");
    const size_t n = s.x.rows;
    size_t kk = std::min<size_t>(std::max(k, 1), n);

    std::vector<std::pair<double, size_t>> dist(n);
    for (size_t i = 0; i < n; ++i) {
        double d2 = 0.0;
        auto row = s.x.row(i);
        for (size_t c = 0; c < x.size(); ++c) {
            double d = row[c] - x[c];
            d2 += d * d;
        }
        dist[i] = {d2, i};
    }
    std::nth_element(dist.begin(), dist.begin() + static_cast<ptrdiff_t>(kk - 1), dist.end());
    double kth = dist[kk - 1].first;

    // All points at the k-th distance vote, which keeps the prediction
    // independent of training-row order when distances tie.
    int votes[2] = {0, 0};
    for (size_t i = 0; i < n; ++i) {
        if (dist[i].first <= kth) ++votes[s.y[dist[i].second]];
    }
    return votes[1] > votes[0] ? 1 : 0;
}

NbcState fit_gnbc(const FitContext&, const Matrix& x, const std::vector<int>& y) {
    const size_t n = x.rows, d = x.cols;
    NbcState s;
    s.gaussian = true;
    s.mean = Matrix(2, d);
    s.var = Matrix(2, d);
    size_t count[2] = {0, 0};
    for (size_t r = 0; r < n; ++r) {
        size_t k = static_cast<size_t>(y[r]);
        ++count[k];
        for (size_t c = 0; c < d; ++c) s.mean.at(k, c) += x.at(r, c);
    }
    for (int k = 0; k < 2; ++k) {
        for (size_t c = 0; c < d; ++c) {
            if (count[k]) s.mean.at(static_cast<size_t>(k), c) /= static_cast<double>(count[k]);
        }
    }
    for (size_t r = 0; r < n; ++r) {
        size_t k = static_cast<size_t>(y[r]);
        for (size_t c = 0; c < d; ++c) {
            double dv = x.at(r, c) - s.mean.at(k, c);
            s.var.at(k, c) += dv * dv;
        }
    }
    double max_var = 0.0;
    for (int k = 0; k < 2; ++k) {
        for (size_t c = 0; c < d; ++c) {
            if (count[k]) s.var.at(static_cast<size_t>(k), c) /= static_cast<double>(count[k]);
            max_var = std::max(max_var, s.var.at(static_cast<size_t>(k), c));
        }
    }
    double eps = std::max(1e-9 * max_var, 1e-12);
    for (double& v : s.var.data) v += eps;

    for (int k = 0; k < 2; ++k) {
        s.log_prior[static_cast<size_t>(k)] =
            count[k] ? std::log(static_cast<double>(count[k]) / static_cast<double>(n))
                     : -std::numeric_limits<double>::infinity();
    }
    return s;
}

NbcState fit_bnbc(const FitContext&, const Matrix& x, const std::vector<int>& y) {
    const size_t n = x.rows, d = x.cols;
    NbcState s;
    s.gaussian = false;
    s.log_p = Matrix(2, d);
    s.log_1mp = Matrix(2, d);
    size_t count[2] = {0, 0};
    Matrix on(2, d);
    for (size_t r = 0; r < n; ++r) {
        size_t k = static_cast<size_t>(y[r]);
        ++count[k];
        for (size_t c = 0; c < d; ++c) {
            if (x.at(r, c) > 0.0) on.at(k, c) += 1.0;
        }
    }
    for (int k = 0; k < 2; ++k) {
        for (size_t c = 0; c < d; ++c) {
            // Laplace smoothing
            double p = (on.at(static_cast<size_t>(k), c) + 1.0) /
                       (static_cast<double>(count[k]) + 2.0);
            s.log_p.at(static_cast<size_t>(k), c) = std::log(p);
            s.log_1mp.at(static_cast<size_t>(k), c) = std::log(1.0 - p);
        }
        s.log_prior[static_cast<size_t>(k)] =
            count[k] ? std::log(static_cast<double>(count[k]) / static_cast<double>(n))
                     : -std::numeric_limits<double>::infinity();
    }
    return s;
}

int predict_nbc(const NbcState& s, std::span<const double> x) {
    auto score = bayes_posterior(s, x);
    return score[1] > score[0] ? 1 : 0;
}

int predict_linear(const LinearState& s, std::span<const double> x) {
    if (x.size() != s.w.size()) raise(Errc::dimension_mismatch, "linear dimension mismatch");
    double v = s.b;
    for (size_t c = 0; c < x.size(); ++c) v += s.w[c] * x[c];
    return v > 0.0 ? 0 : 1; // positive scores mean class 0
}

} // namespace detail

} // namespace packdet
