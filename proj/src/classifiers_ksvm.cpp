#include "packdet/error.hpp"

#include "classifiers_impl.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace packdet::detail {

double kernel_eval(Kernel kernel, double gamma, double coef0, int degree,
                   std::span<const double> a, std::span<const double> b) {
    switch (kernel) {
        case Kernel::linear: {
            double s = 0.0;
            for (size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
            return s;
        }
        case Kernel::polynomial: {
            double s = 0.0;
            for (size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
            return std::pow(gamma * s + coef0, degree);
        }
        case Kernel::rbf: {
            double s = 0.0;
            for (size_t i = 0; i < a.size(); ++i) {
                double d = a[i] - b[i];
                s += d * d;
            }
            return std::exp(-gamma * s);
        }
        case Kernel::sigmoid: {
            double s = 0.0;
            for (size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
            return std::tanh(gamma * s + coef0);
        }
    }
    return 0.0;
}

namespace {

// Platt-style sequential minimal optimization of the dual problem, with a
// full error cache and precomputed kernel matrix at desk scale.
class SmoSolver {
public:
    SmoSolver(const Matrix& x, const std::vector<double>& t, Kernel kernel, double gamma,
              double coef0, int degree, double c, Rng& rng)
        : x_(x), t_(t), kernel_(kernel), gamma_(gamma), coef0_(coef0), degree_(degree), c_(c),
          rng_(rng), n_(x.rows), alpha_(x.rows, 0.0), error_(x.rows, 0.0) {
        precompute_ = n_ <= 4096;
        if (precompute_) {
            k_.assign(n_ * n_, 0.0);
            for (size_t i = 0; i < n_; ++i) {
                for (size_t j = i; j < n_; ++j) {
                    double v = kernel_eval(kernel_, gamma_, coef0_, degree_, x_.row(i), x_.row(j));
                    k_[i * n_ + j] = v;
                    k_[j * n_ + i] = v;
                }
            }
        }
        for (size_t i = 0; i < n_; ++i) error_[i] = -t_[i]; // f = 0 initially
    }

    bool solve(int max_sweeps) {
        bool examine_all = true;
        int changed = 0;
        int sweeps = 0;
        while (sweeps < max_sweeps) {
            ++sweeps;
            changed = 0;
            if (examine_all) {
                for (size_t i = 0; i < n_; ++i) changed += examine(i);
            } else {
                for (size_t i = 0; i < n_; ++i) {
                    if (alpha_[i] > 0 && alpha_[i] < c_) changed += examine(i);
                }
            }
            if (examine_all) {
                if (changed == 0) return true;
                examine_all = false;
            } else if (changed == 0) {
                examine_all = true;
            }
        }
        return false;
    }

    const std::vector<double>& alpha() const { return alpha_; }
    double bias() const { return b_; }

private:
    double k(size_t i, size_t j) const {
        if (precompute_) return k_[i * n_ + j];
        return kernel_eval(kernel_, gamma_, coef0_, degree_, x_.row(i), x_.row(j));
    }

    int examine(size_t i2) {
        double e2 = error_[i2];
        double r2 = e2 * t_[i2];
        bool violates = (r2 < -tol_ && alpha_[i2] < c_) || (r2 > tol_ && alpha_[i2] > 0);
        if (!violates) return 0;

        // second-choice heuristic: largest |e1 - e2| among non-bound points
        ptrdiff_t best = -1;
        double best_gap = 0.0;
        for (size_t i = 0; i < n_; ++i) {
            if (alpha_[i] <= 0 || alpha_[i] >= c_) continue;
            double gap = std::abs(error_[i] - e2);
            if (gap > best_gap) {
                best_gap = gap;
                best = static_cast<ptrdiff_t>(i);
            }
        }
        if (best >= 0 && take_step(static_cast<size_t>(best), i2)) return 1;

        size_t start = static_cast<size_t>(rng_.below(n_));
        for (size_t off = 0; off < n_; ++off) {
            size_t i1 = (start + off) % n_;
            if (alpha_[i1] > 0 && alpha_[i1] < c_ && take_step(i1, i2)) return 1;
        }
        start = static_cast<size_t>(rng_.below(n_));
        for (size_t off = 0; off < n_; ++off) {
            size_t i1 = (start + off) % n_;
            if (take_step(i1, i2)) return 1;
        }
        return 0;
    }

    bool take_step(size_t i1, size_t i2) {
        if (i1 == i2) return false;
        double a1 = alpha_[i1], a2 = alpha_[i2];
        double t1 = t_[i1], t2 = t_[i2];
        double e1 = error_[i1], e2 = error_[i2];
        double s = t1 * t2;

        double lo, hi;
        if (t1 != t2) {
            lo = std::max(0.0, a2 - a1);
            hi = std::min(c_, c_ + a2 - a1);
        } else {
            lo = std::max(0.0, a1 + a2 - c_);
            hi = std::min(c_, a1 + a2);
        }
        if (lo >= hi) return false;

        double k11 = k(i1, i1), k12 = k(i1, i2), k22 = k(i2, i2);
        double eta = k11 + k22 - 2.0 * k12;
        if (eta <= 0) return false; // duplicate points make no progress
        double a2_new = std::clamp(a2 + t2 * (e1 - e2) / eta, lo, hi);
        if (std::abs(a2_new - a2) < 1e-12 * (a2_new + a2 + 1e-12)) return false;
        double a1_new = a1 + s * (a2 - a2_new);

        double d1 = t1 * (a1_new - a1), d2 = t2 * (a2_new - a2);
        double b1 = b_ - e1 - d1 * k11 - d2 * k12;
        double b2 = b_ - e2 - d1 * k12 - d2 * k22;
        double b_new;
        if (a1_new > 0 && a1_new < c_) b_new = b1;
        else if (a2_new > 0 && a2_new < c_) b_new = b2;
        else b_new = (b1 + b2) / 2.0;

        for (size_t j = 0; j < n_; ++j) {
            error_[j] += d1 * k(i1, j) + d2 * k(i2, j) + (b_new - b_);
        }
        alpha_[i1] = a1_new;
        alpha_[i2] = a2_new;
        b_ = b_new;
        return true;
    }

    const Matrix& x_;
    const std::vector<double>& t_;
    Kernel kernel_;
    double gamma_, coef0_;
    int degree_;
    double c_;
    Rng& rng_;
    size_t n_;
    std::vector<double> alpha_, error_;
    std::vector<double> k_;
    bool precompute_ = false;
    double b_ = 0.0;
    static constexpr double tol_ = 1e-3;
};

} // namespace

KsvmState fit_ksvm(const FitContext& ctx, const Matrix& x, const std::vector<int>& y) {
    const size_t n = x.rows;
    std::vector<double> t(n);
    for (size_t i = 0; i < n; ++i) t[i] = y[i] == 0 ? 1.0 : -1.0;

    double gamma = ctx.config.gamma;
    if (gamma <= 0) {
        // "scale": 1 / (d * variance of the flattened training matrix)
        double mean = 0.0;
        for (double v : x.data) mean += v;
        mean /= static_cast<double>(x.data.size());
        double var = 0.0;
        for (double v : x.data) var += (v - mean) * (v - mean);
        var /= static_cast<double>(x.data.size());
        gamma = var > 0 ? 1.0 / (static_cast<double>(x.cols) * var)
                        : 1.0 / static_cast<double>(x.cols);
    }

    SmoSolver solver(x, t, ctx.config.kernel, gamma, ctx.config.coef0, ctx.config.poly_degree,
                     ctx.config.svm_c, ctx.rng);
    if (!solver.solve(std::max(ctx.config.max_iter, 1))) {
        ctx.warning = "NonConvergence: smo hit the sweep cap";
    }

    KsvmState s;
    s.kernel = ctx.config.kernel;
    s.gamma = gamma;
    s.coef0 = ctx.config.coef0;
    s.degree = ctx.config.poly_degree;
    s.bias = solver.bias();
    const std::vector<double>& alpha = solver.alpha();
    for (size_t i = 0; i < n; ++i) {
        if (alpha[i] > 1e-12) {
            s.support_vectors.push_row(x.row(i));
            s.coeffs.push_back(alpha[i] * t[i]);
        }
    }
    if (s.support_vectors.rows == 0) {
        // degenerate solve; keep one point so predict stays defined
        s.support_vectors.push_row(x.row(0));
        s.coeffs.push_back(0.0);
    }
    return s;
}

int predict_ksvm(const KsvmState& s, std::span<const double> x) {
    if (x.size() != s.support_vectors.cols) {
        raise(Errc::dimension_mismatch, "ksvm dimension mismatch");
    }
    double f = s.bias;
    for (size_t i = 0; i < s.support_vectors.rows; ++i) {
        f += s.coeffs[i] *
             kernel_eval(s.kernel, s.gamma, s.coef0, s.degree, s.support_vectors.row(i), x);
    }
    return f > 0.0 ? 0 : 1; // positive scores mean class 0
}

} // namespace packdet::detail
