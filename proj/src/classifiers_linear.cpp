#include "packdet/error.hpp"

#include "classifiers_impl.hpp"

#include <algorithm>
#include <cmath>

namespace packdet {

double lr_nll_gradient(const Matrix& x, std::span<const int> targets, std::span<const double> w,
                       double b, double l2, std::span<double> grad_w, double& grad_b) {
    const size_t n = x.rows, d = x.cols;
    if (targets.size() != n || w.size() != d || grad_w.size() != d) {
        raise(Errc::dimension_mismatch, "lr_nll_gradient: shape mismatch");
    }
    std::fill(grad_w.begin(), grad_w.end(), 0.0);
    grad_b = 0.0;
    double loss = 0.0;
    for (size_t r = 0; r < n; ++r) {
        auto row = x.row(r);
        double z = b;
        for (size_t c = 0; c < d; ++c) z += w[c] * row[c];
        double p = logistic(z);
        double t = static_cast<double>(targets[r]);
        // numerically stable -[t log p + (1-t) log(1-p)]
        loss += (z >= 0 ? std::log1p(std::exp(-z)) + (1.0 - t) * z
                        : std::log1p(std::exp(z)) - t * z);
        double g = p - t;
        for (size_t c = 0; c < d; ++c) grad_w[c] += g * row[c];
        grad_b += g;
    }
    const double inv_n = 1.0 / static_cast<double>(n);
    loss *= inv_n;
    grad_b *= inv_n;
    double reg = 0.0;
    for (size_t c = 0; c < d; ++c) {
        grad_w[c] = grad_w[c] * inv_n + l2 * w[c];
        reg += w[c] * w[c];
    }
    loss += 0.5 * l2 * reg;
    return loss;
}

namespace detail {

namespace {

double inf_norm(std::span<const double> v, double b) {
    double m = std::abs(b);
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
}

// Backtracking (Armijo) gradient descent over a smooth objective.
template <class LossGrad>
void descend_smooth(std::vector<double>& w, double& b, int max_iter, LossGrad&& eval,
                    std::string& warning, const char* who) {
    const size_t d = w.size();
    std::vector<double> gw(d), trial_gw(d), wt(d);
    double gb = 0.0, trial_gb = 0.0;
    double loss = eval(w, b, gw, gb);
    double step = 1.0;
    int iter = 0;
    for (; iter < max_iter; ++iter) {
        double gnorm2 = gb * gb;
        for (double g : gw) gnorm2 += g * g;
        if (inf_norm(gw, gb) < 1e-7) return;

        bool accepted = false;
        for (int half = 0; half < 40; ++half) {
            for (size_t c = 0; c < d; ++c) wt[c] = w[c] - step * gw[c];
            double bt = b - step * gb;
            double trial = eval(wt, bt, trial_gw, trial_gb);
            if (trial <= loss - 1e-4 * step * gnorm2) {
                w = wt;
                b = bt;
                gw = trial_gw;
                gb = trial_gb;
                loss = trial;
                step = std::min(step * 2.0, 1e6);
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if (!accepted) return; // no descent direction left at double precision
    }
    warning = std::string("NonConvergence: ") + who + " stopped after " +
              std::to_string(iter) + " iterations";
}

} // namespace

LinearState fit_lr(const FitContext& ctx, const Matrix& x, const std::vector<int>& y) {
    const size_t d = x.cols;
    // positive scores encode class 0, so train on flipped targets
    std::vector<int> t(y.size());
    for (size_t i = 0; i < y.size(); ++i) t[i] = 1 - y[i];

    LinearState s;
    s.w.assign(d, 0.0);
    s.b = 0.0;
    double l2 = ctx.config.regularization;
    descend_smooth(
        s.w, s.b, std::max(ctx.config.max_iter, 1),
        [&](const std::vector<double>& w, double b, std::vector<double>& gw, double& gb) {
            return lr_nll_gradient(x, t, w, b, l2, gw, gb);
        },
        ctx.warning, "lr");
    return s;
}

namespace {

// (lambda/2)|w|^2 + mean hinge or squared-hinge loss over margins t*(w.x+b)
double svm_loss_gradient(const Matrix& x, std::span<const double> t, std::span<const double> w,
                         double b, double l2, bool squared, std::span<double> gw, double& gb) {
    const size_t n = x.rows, d = x.cols;
    std::fill(gw.begin(), gw.end(), 0.0);
    gb = 0.0;
    double loss = 0.0;
    for (size_t r = 0; r < n; ++r) {
        auto row = x.row(r);
        double z = b;
        for (size_t c = 0; c < d; ++c) z += w[c] * row[c];
        double margin = 1.0 - t[r] * z;
        if (margin <= 0) continue;
        if (squared) {
            loss += margin * margin;
            double g = -2.0 * margin * t[r];
            for (size_t c = 0; c < d; ++c) gw[c] += g * row[c];
            gb += g;
        } else {
            loss += margin;
            for (size_t c = 0; c < d; ++c) gw[c] += -t[r] * row[c];
            gb += -t[r];
        }
    }
    const double inv_n = 1.0 / static_cast<double>(n);
    loss *= inv_n;
    gb *= inv_n;
    double reg = 0.0;
    for (size_t c = 0; c < d; ++c) {
        gw[c] = gw[c] * inv_n + l2 * w[c];
        reg += w[c] * w[c];
    }
    return loss + 0.5 * l2 * reg;
}

} // namespace

LinearState fit_lsvm(const FitContext& ctx, const Matrix& x, const std::vector<int>& y) {
    const size_t d = x.cols;
    std::vector<double> t(y.size());
    for (size_t i = 0; i < y.size(); ++i) t[i] = y[i] == 0 ? 1.0 : -1.0;

    LinearState s;
    s.w.assign(d, 0.0);
    s.b = 0.0;
    double l2 = std::max(ctx.config.regularization, 1e-8);

    if (ctx.config.loss == Loss::squared_hinge) {
        descend_smooth(
            s.w, s.b, std::max(ctx.config.max_iter, 1),
            [&](const std::vector<double>& w, double b, std::vector<double>& gw, double& gb) {
                return svm_loss_gradient(x, t, w, b, l2, true, gw, gb);
            },
            ctx.warning, "lsvm");
        return s;
    }

    // hinge loss: plain subgradient descent with a decaying step, keeping the
    // best iterate by objective value
    const int iters = std::max(ctx.config.max_iter, 1) * 4;
    std::vector<double> gw(d);
    double gb = 0.0;
    std::vector<double> best_w = s.w;
    double best_b = s.b;
    double best_loss = svm_loss_gradient(x, t, s.w, s.b, l2, false, gw, gb);
    for (int k = 0; k < iters; ++k) {
        double step = 1.0 / (1.0 + l2 * static_cast<double>(k + 1));
        for (size_t c = 0; c < d; ++c) s.w[c] -= step * gw[c];
        s.b -= step * gb;
        double loss = svm_loss_gradient(x, t, s.w, s.b, l2, false, gw, gb);
        if (loss < best_loss) {
            best_loss = loss;
            best_w = s.w;
            best_b = s.b;
        }
    }
    s.w = best_w;
    s.b = best_b;
    return s;
}

} // namespace detail

} // namespace packdet
