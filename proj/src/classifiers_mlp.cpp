#include "packdet/error.hpp"

#include "classifiers_impl.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace packdet {

namespace {

double activate(Activation a, double z) {
    switch (a) {
        case Activation::identity: return z;
        case Activation::tanh_act: return std::tanh(z);
        case Activation::logistic_act: return logistic(z);
        case Activation::relu: return z > 0 ? z : 0.0;
    }
    return z;
}

double activate_grad(Activation a, double out) {
    // derivative expressed through the activation output
    switch (a) {
        case Activation::identity: return 1.0;
        case Activation::tanh_act: return 1.0 - out * out;
        case Activation::logistic_act: return out * (1.0 - out);
        case Activation::relu: return out > 0 ? 1.0 : 0.0;
    }
    return 1.0;
}

struct LayerDims {
    std::vector<size_t> in, out;
    std::vector<size_t> w_off, b_off;
    size_t total = 0;
};

LayerDims layer_dims(const MlpArch& arch) {
    LayerDims d;
    size_t prev = arch.input;
    for (int h : arch.hidden) {
        d.in.push_back(prev);
        d.out.push_back(static_cast<size_t>(h));
        prev = static_cast<size_t>(h);
    }
    d.in.push_back(prev);
    d.out.push_back(1);
    size_t off = 0;
    for (size_t l = 0; l < d.in.size(); ++l) {
        d.w_off.push_back(off);
        off += d.in[l] * d.out[l];
        d.b_off.push_back(off);
        off += d.out[l];
    }
    d.total = off;
    return d;
}

} // namespace

size_t MlpArch::param_count() const { return layer_dims(*this).total; }

double mlp_loss_gradient(const MlpArch& arch, Activation act, std::span<const double> params,
                         const Matrix& x, std::span<const int> y, double l2,
                         std::span<double> grad) {
    LayerDims dims = layer_dims(arch);
    if (params.size() != dims.total || grad.size() != dims.total) {
        raise(Errc::dimension_mismatch, "mlp_loss_gradient: parameter size mismatch");
    }
    if (x.cols != arch.input || y.size() != x.rows || x.rows == 0) {
        raise(Errc::dimension_mismatch, "mlp_loss_gradient: data shape mismatch");
    }
    const size_t layers = dims.in.size();
    std::fill(grad.begin(), grad.end(), 0.0);

    std::vector<std::vector<double>> outs(layers);
    std::vector<std::vector<double>> delta(layers);
    double loss = 0.0;
    for (size_t r = 0; r < x.rows; ++r) {
        // forward
        std::span<const double> prev = x.row(r);
        for (size_t l = 0; l < layers; ++l) {
            outs[l].assign(dims.out[l], 0.0);
            const double* w = params.data() + dims.w_off[l];
            const double* b = params.data() + dims.b_off[l];
            for (size_t o = 0; o < dims.out[l]; ++o) {
                double z = b[o];
                const double* wo = w + o * dims.in[l];
                for (size_t i = 0; i < dims.in[l]; ++i) z += wo[i] * prev[i];
                outs[l][o] = l + 1 == layers ? logistic(z) : activate(act, z);
            }
            prev = outs[l];
        }
        double p = std::clamp(outs[layers - 1][0], 1e-12, 1.0 - 1e-12);
        double t = static_cast<double>(y[r]);
        loss += -(t * std::log(p) + (1.0 - t) * std::log(1.0 - p));

        // backward: output delta is exact for sigmoid + cross entropy
        delta[layers - 1].assign(1, outs[layers - 1][0] - t);
        for (size_t l = layers - 1; l-- > 0;) {
            delta[l].assign(dims.out[l], 0.0);
            const double* w_up = params.data() + dims.w_off[l + 1];
            for (size_t o = 0; o < dims.out[l]; ++o) {
                double s = 0.0;
                for (size_t u = 0; u < dims.out[l + 1]; ++u) {
                    s += w_up[u * dims.in[l + 1] + o] * delta[l + 1][u];
                }
                delta[l][o] = s * activate_grad(act, outs[l][o]);
            }
        }
        for (size_t l = 0; l < layers; ++l) {
            std::span<const double> below = l == 0 ? x.row(r) : std::span<const double>(outs[l - 1]);
            double* gw = grad.data() + dims.w_off[l];
            double* gb = grad.data() + dims.b_off[l];
            for (size_t o = 0; o < dims.out[l]; ++o) {
                double dlt = delta[l][o];
                double* gwo = gw + o * dims.in[l];
                for (size_t i = 0; i < dims.in[l]; ++i) gwo[i] += dlt * below[i];
                gb[o] += dlt;
            }
        }
    }

    const double inv_n = 1.0 / static_cast<double>(x.rows);
    loss *= inv_n;
    for (double& g : grad) g *= inv_n;
    // L2 on weights only
    double reg = 0.0;
    for (size_t l = 0; l < layers; ++l) {
        const double* w = params.data() + dims.w_off[l];
        double* gw = grad.data() + dims.w_off[l];
        size_t cnt = dims.in[l] * dims.out[l];
        for (size_t i = 0; i < cnt; ++i) {
            reg += w[i] * w[i];
            gw[i] += l2 * w[i];
        }
    }
    return loss + 0.5 * l2 * reg;
}

namespace detail {

MlpState fit_mlp(const FitContext& ctx, const Matrix& x, const std::vector<int>& y) {
    MlpArch arch{x.cols, ctx.config.hidden_layers};
    LayerDims dims = layer_dims(arch);
    if (ctx.config.solver != Solver::sgd) {
        ctx.warning = "solver mapped to sgd";
    }

    // Glorot-uniform init
    std::vector<double> params(dims.total, 0.0);
    for (size_t l = 0; l < dims.in.size(); ++l) {
        double limit = std::sqrt(6.0 / static_cast<double>(dims.in[l] + dims.out[l]));
        for (size_t i = 0; i < dims.in[l] * dims.out[l]; ++i) {
            params[dims.w_off[l] + i] = (ctx.rng.unit() * 2.0 - 1.0) * limit;
        }
    }

    const size_t n = x.rows;
    const size_t batch = std::min<size_t>(std::max(ctx.config.batch_size, 1), n);
    const double lr = ctx.config.learning_rate;
    const double momentum = 0.9;
    const int max_epochs = std::max(ctx.config.max_iter, 1);
    const double l2 = ctx.config.regularization;

    std::vector<double> grad(dims.total), velocity(dims.total, 0.0);
    std::vector<size_t> order(n);
    std::iota(order.begin(), order.end(), 0);

    Matrix bx;
    std::vector<int> by;
    double best_loss = std::numeric_limits<double>::infinity();
    int stall = 0;
    bool converged = false;
    int epoch = 0;
    for (; epoch < max_epochs; ++epoch) {
        ctx.rng.shuffle(order);
        double epoch_loss = 0.0;
        size_t batches = 0;
        for (size_t start = 0; start < n; start += batch) {
            size_t len = std::min(batch, n - start);
            bx = Matrix(len, x.cols);
            by.resize(len);
            for (size_t i = 0; i < len; ++i) {
                std::copy_n(x.row(order[start + i]).begin(), x.cols, bx.row(i).begin());
                by[i] = y[order[start + i]];
            }
            epoch_loss += mlp_loss_gradient(arch, ctx.config.activation, params, bx, by, l2, grad);
            ++batches;
            for (size_t i = 0; i < dims.total; ++i) {
                velocity[i] = momentum * velocity[i] - lr * grad[i];
                params[i] += velocity[i];
            }
        }
        epoch_loss /= static_cast<double>(batches);
        if (epoch_loss < best_loss - 1e-5) {
            best_loss = epoch_loss;
            stall = 0;
        } else if (++stall >= 10) {
            converged = true;
            break;
        }
    }
    if (!converged && ctx.warning.empty()) {
        ctx.warning = "NonConvergence: mlp stopped after " + std::to_string(epoch) + " epochs";
    }

    MlpState s;
    s.activation = ctx.config.activation;
    for (size_t l = 0; l < dims.in.size(); ++l) {
        Matrix w(dims.out[l], dims.in[l]);
        std::copy_n(params.begin() + static_cast<ptrdiff_t>(dims.w_off[l]), w.data.size(),
                    w.data.begin());
        s.weights.push_back(std::move(w));
        s.biases.emplace_back(params.begin() + static_cast<ptrdiff_t>(dims.b_off[l]),
                              params.begin() + static_cast<ptrdiff_t>(dims.b_off[l]) +
                                  static_cast<ptrdiff_t>(dims.out[l]));
    }
    return s;
}

int predict_mlp(const MlpState& s, std::span<const double> x) {
    if (s.weights.empty() || x.size() != s.weights[0].cols) {
        raise(Errc::dimension_mismatch, "mlp dimension mismatch");
    }
    std::vector<double> cur(x.begin(), x.end()), next;
    for (size_t l = 0; l < s.weights.size(); ++l) {
        const Matrix& w = s.weights[l];
        next.assign(w.rows, 0.0);
        for (size_t o = 0; o < w.rows; ++o) {
            double z = s.biases[l][o];
            auto row = w.row(o);
            for (size_t i = 0; i < w.cols; ++i) z += row[i] * cur[i];
            next[o] = l + 1 == s.weights.size() ? logistic(z) : activate(s.activation, z);
        }
        cur.swap(next);
    }
    return cur[0] > 0.5 ? 1 : 0;
}

} // namespace detail

} // namespace packdet
