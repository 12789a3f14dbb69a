#include "packdet/classifiers.hpp"

#include "packdet/error.hpp"
#include "packdet/metrics.hpp"

#include "classifiers_impl.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

namespace packdet {

namespace {

const BucketTable& bucket_table() {
    static const BucketTable t = BucketTable::builtin();
    return t;
}

} // namespace

const char* family_name(Family f) {
    switch (f) {
        case Family::knn: return "KNN";
        case Family::gnbc: return "GNBC";
        case Family::bnbc: return "BNBC";
        case Family::lr: return "LR";
        case Family::lsvm: return "LSVM";
        case Family::dt: return "DT";
        case Family::rf: return "RF";
        case Family::gbdt: return "GBDT";
        case Family::mlp: return "MLP";
        case Family::ksvm: return "KSVM";
        case Family::dl85: return "DL85";
    }
    return "?";
}

Family family_from_name(const std::string& name) {
    for (Family f : {Family::knn, Family::gnbc, Family::bnbc, Family::lr, Family::lsvm,
                     Family::dt, Family::rf, Family::gbdt, Family::mlp, Family::ksvm,
                     Family::dl85}) {
        if (name == family_name(f)) return f;
    }
    raise(Errc::bad_argument, "unknown classifier family: " + name);
}

const char* preprocessing_name(Preprocessing p) {
    switch (p) {
        case Preprocessing::none: return "none";
        case Preprocessing::boolean: return "boolean";
        case Preprocessing::minmax: return "minmax";
        case Preprocessing::zscore: return "zscore";
    }
    return "?";
}

Preprocessing preprocessing_from_name(const std::string& name) {
    for (Preprocessing p : {Preprocessing::none, Preprocessing::boolean, Preprocessing::minmax,
                            Preprocessing::zscore}) {
        if (name == preprocessing_name(p)) return p;
    }
    raise(Errc::bad_argument, "unknown preprocessing: " + name);
}

double logistic(double z) {
    if (z >= 0) {
        return 1.0 / (1.0 + std::exp(-z));
    }
    double e = std::exp(z);
    return e / (1.0 + e);
}

bool AlgoConfig::in_grid() const {
    switch (family) {
        case Family::knn:
            return k_neighbors >= 1 && k_neighbors <= 30;
        case Family::dt:
            return min_leaf >= 2 && min_leaf <= 12 && max_depth >= 1 && max_depth <= 12;
        case Family::rf:
        case Family::gbdt:
            return n_estimators >= 2 && n_estimators <= 150 && min_leaf >= 2 && min_leaf <= 12 &&
                   max_depth >= 1 && max_depth <= 12;
        case Family::mlp: {
            if (hidden_layers.empty() || hidden_layers.size() > 3) return false;
            for (int h : hidden_layers) {
                if (h != 25 && h != 50 && h != 100) return false;
            }
            return true;
        }
        case Family::dl85:
            return max_depth >= 1 && max_depth <= 10;
        default:
            return true;
    }
}

AlgoConfig preset(Family family) {
    AlgoConfig c;
    c.family = family;
    switch (family) {
        case Family::knn:
            c.preprocessing = Preprocessing::boolean;
            c.k_neighbors = 16;
            break;
        case Family::bnbc:
            c.preprocessing = Preprocessing::boolean;
            break;
        case Family::gnbc:
            c.preprocessing = Preprocessing::zscore;
            break;
        case Family::lr:
            c.preprocessing = Preprocessing::zscore;
            c.loss = Loss::squared_hinge;
            break;
        case Family::lsvm:
            c.preprocessing = Preprocessing::boolean;
            c.loss = Loss::squared_hinge;
            break;
        case Family::dt:
            c.preprocessing = Preprocessing::none;
            c.criterion = Criterion::entropy;
            c.min_leaf = 10;
            c.max_depth = 6;
            break;
        case Family::rf:
        case Family::gbdt:
            c.preprocessing = Preprocessing::none;
            c.n_estimators = 20;
            c.criterion = Criterion::entropy;
            c.min_leaf = 10;
            c.max_depth = 6;
            c.learning_rate = 0.1;
            break;
        case Family::mlp:
            c.preprocessing = Preprocessing::boolean;
            c.hidden_layers = {50, 100};
            c.activation = Activation::logistic_act;
            c.solver = Solver::sgd;
            c.learning_rate = 0.1;
            break;
        case Family::ksvm:
            c.preprocessing = Preprocessing::zscore;
            c.kernel = Kernel::rbf;
            break;
        case Family::dl85:
            c.preprocessing = Preprocessing::boolean;
            c.max_depth = 10;
            break;
    }
    return c;
}

std::vector<AlgoConfig> default_grid(Family family, bool full) {
    std::vector<AlgoConfig> grid;
    const std::vector<Preprocessing> pre_all = {Preprocessing::none, Preprocessing::boolean,
                                                Preprocessing::minmax, Preprocessing::zscore};
    auto push = [&](AlgoConfig c) { grid.push_back(std::move(c)); };

    switch (family) {
        case Family::knn: {
            std::vector<int> ks;
            if (full) {
                for (int k = 1; k <= 30; ++k) ks.push_back(k);
            } else {
                ks = {1, 2, 4, 8, 16, 24, 30};
            }
            for (Preprocessing p : pre_all) {
                for (int k : ks) {
                    AlgoConfig c = preset(family);
                    c.preprocessing = p;
                    c.k_neighbors = k;
                    push(c);
                }
            }
            break;
        }
        case Family::gnbc:
        case Family::bnbc:
            for (Preprocessing p : pre_all) {
                AlgoConfig c = preset(family);
                c.preprocessing = p;
                push(c);
            }
            break;
        case Family::lr:
        case Family::lsvm:
            for (Preprocessing p : pre_all) {
                for (Loss l : {Loss::hinge, Loss::squared_hinge}) {
                    AlgoConfig c = preset(family);
                    c.preprocessing = p;
                    c.loss = l;
                    push(c);
                }
            }
            break;
        case Family::dt: {
            std::vector<int> leaves = full ? std::vector<int>{2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12}
                                           : std::vector<int>{2, 6, 10};
            std::vector<int> depths = full ? std::vector<int>{1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12}
                                           : std::vector<int>{2, 4, 6, 12};
            for (Preprocessing p : pre_all) {
                for (Criterion crit : {Criterion::entropy, Criterion::gini}) {
                    for (int ml : leaves) {
                        for (int md : depths) {
                            AlgoConfig c = preset(family);
                            c.preprocessing = p;
                            c.criterion = crit;
                            c.min_leaf = ml;
                            c.max_depth = md;
                            push(c);
                        }
                    }
                }
            }
            break;
        }
        case Family::rf:
        case Family::gbdt: {
            std::vector<int> estimators = full ? std::vector<int>{2, 5, 10, 20, 50, 100, 150}
                                               : std::vector<int>{2, 10, 20, 50};
            for (Preprocessing p : pre_all) {
                for (int n : estimators) {
                    AlgoConfig c = preset(family);
                    c.preprocessing = p;
                    c.n_estimators = n;
                    push(c);
                }
            }
            break;
        }
        case Family::mlp: {
            std::vector<std::vector<int>> archs;
            if (full) {
                for (int a : {25, 50, 100}) {
                    archs.push_back({a});
                    for (int b : {25, 50, 100}) {
                        archs.push_back({a, b});
                        for (int c2 : {25, 50, 100}) archs.push_back({a, b, c2});
                    }
                }
            } else {
                archs = {{50}, {100}, {50, 100}};
            }
            std::vector<Activation> acts =
                full ? std::vector<Activation>{Activation::identity, Activation::tanh_act,
                                               Activation::logistic_act, Activation::relu}
                     : std::vector<Activation>{Activation::logistic_act, Activation::relu};
            std::vector<Preprocessing> pres =
                full ? pre_all
                     : std::vector<Preprocessing>{Preprocessing::boolean, Preprocessing::zscore};
            for (Preprocessing p : pres) {
                for (const auto& arch : archs) {
                    for (Activation a : acts) {
                        AlgoConfig c = preset(family);
                        c.preprocessing = p;
                        c.hidden_layers = arch;
                        c.activation = a;
                        push(c);
                    }
                }
            }
            break;
        }
        case Family::ksvm: {
            std::vector<Preprocessing> pres =
                full ? pre_all : std::vector<Preprocessing>{Preprocessing::zscore};
            for (Preprocessing p : pres) {
                for (Kernel k : {Kernel::linear, Kernel::polynomial, Kernel::rbf,
                                 Kernel::sigmoid}) {
                    AlgoConfig c = preset(family);
                    c.preprocessing = p;
                    c.kernel = k;
                    push(c);
                }
            }
            break;
        }
        case Family::dl85:
            push(preset(family));
            break;
    }
    return grid;
}

namespace {

struct Pipeline {
    const Model& m;

    std::vector<double> apply(std::span<const double> x) const {
        std::vector<double> v(x.begin(), x.end());
        if (m.booleanized) {
            v = bucket_table().booleanize_row(v, m.feature_ids);
        } else if (m.scaler) {
            v = apply_scaler(*m.scaler, v);
        }
        if (m.pca) {
            v = apply_scaler(*m.pca_scaler, v);
            v = pca_transform(*m.pca, v);
        }
        return v;
    }
};

void validate_labels(const Dataset& data, Family family) {
    if (data.size() == 0) raise(Errc::empty_matrix, "fit: empty dataset");
    if (data.labels.size() != data.size()) {
        raise(Errc::length_mismatch, "fit: labels do not match rows");
    }
    bool has0 = false, has1 = false;
    for (int y : data.labels) {
        if (y == 0) has0 = true;
        else if (y == 1) has1 = true;
        else raise(Errc::bad_argument, "fit: labels must be 0/1");
    }
    if (family != Family::knn && !(has0 && has1)) {
        raise(Errc::single_class, "fit: both classes required");
    }
}

} // namespace

Model fit(const AlgoConfig& config, const Dataset& data) {
    if (config.family == Family::dl85) {
        raise(Errc::unsupported_family, "dl85 is a config slot without an implementation");
    }
    validate_labels(data, config.family);

    auto t0 = std::chrono::steady_clock::now();
    Model m;
    m.family = config.family;
    m.config = config;
    m.feature_ids = data.feature_ids;
    m.raw_dim = data.x.cols;

    Matrix x = data.x;
    if (config.preprocessing == Preprocessing::boolean) {
        m.booleanized = true;
        m.bucket_table_version = bucket_table().version();
        x = bucket_table().booleanize_matrix(x, m.feature_ids);
    } else if (config.preprocessing == Preprocessing::minmax) {
        m.scaler = fit_scaler(ScalerMode::minmax, x);
        x = apply_scaler(*m.scaler, x);
    } else if (config.preprocessing == Preprocessing::zscore) {
        m.scaler = fit_scaler(ScalerMode::zscore, x);
        x = apply_scaler(*m.scaler, x);
    }
    if (config.pca_components > 0) {
        if (config.family == Family::bnbc) {
            raise(Errc::unsupported_family, "bnbc needs binary inputs, not principal components");
        }
        m.pca_scaler = fit_scaler(ScalerMode::zscore, x);
        x = apply_scaler(*m.pca_scaler, x);
        m.pca = pca_fit(x, static_cast<size_t>(config.pca_components));
        x = pca_transform(*m.pca, x);
    }

    Rng rng(config.seed);
    detail::FitContext ctx{config, rng, m.warning};
    switch (config.family) {
        case Family::knn: m.state = detail::fit_knn(ctx, x, data.labels); break;
        case Family::gnbc: m.state = detail::fit_gnbc(ctx, x, data.labels); break;
        case Family::bnbc: m.state = detail::fit_bnbc(ctx, x, data.labels); break;
        case Family::lr: m.state = detail::fit_lr(ctx, x, data.labels); break;
        case Family::lsvm: m.state = detail::fit_lsvm(ctx, x, data.labels); break;
        case Family::dt: m.state = detail::fit_dt(ctx, x, data.labels); break;
        case Family::rf: m.state = detail::fit_rf(ctx, x, data.labels); break;
        case Family::gbdt: m.state = detail::fit_gbdt(ctx, x, data.labels); break;
        case Family::mlp: m.state = detail::fit_mlp(ctx, x, data.labels); break;
        case Family::ksvm: m.state = detail::fit_ksvm(ctx, x, data.labels); break;
        case Family::dl85: break; // handled above
    }
    m.train_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return m;
}

int predict(const Model& m, std::span<const double> x) {
    if (x.size() != m.raw_dim) {
        raise(Errc::dimension_mismatch,
              "predict: expected " + std::to_string(m.raw_dim) + " features, got " +
                  std::to_string(x.size()));
    }
    std::vector<double> v = Pipeline{m}.apply(x);
    switch (m.family) {
        case Family::knn:
            return detail::predict_knn(std::get<KnnState>(m.state), m.config.k_neighbors, v);
        case Family::gnbc:
        case Family::bnbc:
            return detail::predict_nbc(std::get<NbcState>(m.state), v);
        case Family::lr:
        case Family::lsvm:
            return detail::predict_linear(std::get<LinearState>(m.state), v);
        case Family::dt:
            return detail::predict_tree(std::get<TreeState>(m.state), v);
        case Family::rf:
            return detail::predict_forest(std::get<ForestState>(m.state), v);
        case Family::gbdt:
            return detail::predict_gbdt(std::get<GbdtState>(m.state), v);
        case Family::mlp:
            return detail::predict_mlp(std::get<MlpState>(m.state), v);
        case Family::ksvm:
            return detail::predict_ksvm(std::get<KsvmState>(m.state), v);
        case Family::dl85:
            break;
    }
    raise(Errc::unsupported_family, "predict: unsupported family");
}

std::vector<int> predict_batch(const Model& m, const Matrix& x) {
    std::vector<int> out;
    out.reserve(x.rows);
    for (size_t r = 0; r < x.rows; ++r) out.push_back(predict(m, x.row(r)));
    return out;
}

CvOutcome cross_validate(const AlgoConfig& config, const Dataset& data, size_t folds,
                         uint64_t seed) {
    if (folds < 2) raise(Errc::bad_k, "cross_validate: folds must be >= 2");
    auto fold_sets = kfold_indices(data.size(), folds, seed);

    CvOutcome out;
    for (const auto& test_idx : fold_sets) {
        std::vector<char> in_test(data.size(), 0);
        for (size_t i : test_idx) in_test[i] = 1;
        std::vector<size_t> train_idx;
        train_idx.reserve(data.size() - test_idx.size());
        for (size_t i = 0; i < data.size(); ++i) {
            if (!in_test[i]) train_idx.push_back(i);
        }
        Dataset train = data.select_rows(train_idx);
        Dataset test = data.select_rows(test_idx);
        Model model = fit(config, train);
        std::vector<int> preds = predict_batch(model, test.x);
        out.fold_metrics.push_back(compute_metrics(preds, test.labels));
        out.mean_train_seconds += model.train_seconds;
    }
    for (const MetricsReport& r : out.fold_metrics) out.mean_accuracy += r.accuracy;
    out.mean_accuracy /= static_cast<double>(out.fold_metrics.size());
    out.mean_train_seconds /= static_cast<double>(out.fold_metrics.size());
    return out;
}

GridSearchResult grid_search(const std::vector<AlgoConfig>& grid, const Dataset& data,
                             size_t folds, uint64_t seed) {
    if (folds < 2) raise(Errc::bad_k, "grid_search: folds must be >= 2");
    if (grid.empty()) raise(Errc::bad_argument, "grid_search: empty grid");

    GridSearchResult result;
    result.cells.reserve(grid.size());
    for (const AlgoConfig& config : grid) {
        GridCell cell;
        cell.config = config;
        try {
            CvOutcome cv = cross_validate(config, data, folds, seed);
            cell.mean_accuracy = cv.mean_accuracy;
            cell.mean_train_seconds = cv.mean_train_seconds;
        } catch (const Error& e) {
            cell.failed = true;
            cell.error = e.what();
        }
        result.cells.push_back(std::move(cell));
    }

    bool found = false;
    for (size_t i = 0; i < result.cells.size(); ++i) {
        const GridCell& c = result.cells[i];
        if (c.failed) continue;
        if (!found) {
            result.best_index = i;
            found = true;
            continue;
        }
        const GridCell& best = result.cells[result.best_index];
        if (c.mean_accuracy > best.mean_accuracy ||
            (c.mean_accuracy == best.mean_accuracy &&
             c.mean_train_seconds < best.mean_train_seconds)) {
            result.best_index = i;
        }
    }
    if (!found) raise(Errc::bad_argument, "grid_search: every cell failed");
    return result;
}

} // namespace packdet
