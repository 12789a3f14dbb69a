#pragma once

#include "packdet/dataset.hpp"
#include "packdet/metrics.hpp"
#include "packdet/preprocess.hpp"

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace packdet {

enum class Family { knn, gnbc, bnbc, lr, lsvm, dt, rf, gbdt, mlp, ksvm, dl85 };
enum class Preprocessing { none, boolean, minmax, zscore };
enum class Loss { hinge, squared_hinge };
enum class Criterion { entropy, gini };
enum class Activation { identity, tanh_act, logistic_act, relu };
enum class Kernel { linear, polynomial, rbf, sigmoid };
enum class Solver { sgd, adam, lbfgs }; // adam/lbfgs train as sgd, with a note

const char* family_name(Family f);
Family family_from_name(const std::string& name);
const char* preprocessing_name(Preprocessing p);
Preprocessing preprocessing_from_name(const std::string& name);

struct AlgoConfig {
    Family family = Family::knn;
    Preprocessing preprocessing = Preprocessing::none;
    int pca_components = 0; // 0 = off; implies an internal standardization
    uint64_t seed = 0;

    // knn
    int k_neighbors = 5;
    // linear models
    Loss loss = Loss::squared_hinge;
    double regularization = 1e-4;
    int max_iter = 200;
    // trees
    Criterion criterion = Criterion::entropy;
    int min_leaf = 1;
    int max_depth = 0; // 0 = unlimited
    // ensembles
    int n_estimators = 20;
    double learning_rate = 0.1; // gbdt shrinkage / mlp step size
    bool bootstrap = true;      // rf bagging
    bool feature_subsampling = true; // rf sqrt(d) features per split
    // mlp
    std::vector<int> hidden_layers = {50, 100};
    Activation activation = Activation::logistic_act;
    Solver solver = Solver::sgd;
    int batch_size = 32;
    // ksvm
    Kernel kernel = Kernel::rbf;
    double svm_c = 1.0;
    double gamma = 0.0; // 0 = 1 / (d * var(x))
    int poly_degree = 3;
    double coef0 = 0.0;

    /// True when every hyperparameter lies inside the tuning grid ranges.
    bool in_grid() const;
};

/// Best preprocessing/hyperparameter choice per family, as shipped.
AlgoConfig preset(Family family);

/// Tuning grid for one family. `full` spans the whole documented ranges;
/// otherwise a coarse subsample intended for interactive runs.
std::vector<AlgoConfig> default_grid(Family family, bool full = false);

// ---------------------------------------------------------------------------
// model state per family

struct TreeNode {
    int feature = -1; // -1 = leaf
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    double value = 0.0; // class label or regression value at leaves
    size_t n_samples = 0;
    double impurity = 0.0;
};

struct Tree {
    std::vector<TreeNode> nodes; // nodes[0] is the root

    double predict_value(std::span<const double> x) const;
};

struct KnnState {
    Matrix x;
    std::vector<int> y;
};
struct NbcState {
    bool gaussian = true;
    std::array<double, 2> log_prior{};
    Matrix mean, var;        // gaussian: 2 x d
    Matrix log_p, log_1mp;   // bernoulli: 2 x d
};
struct LinearState {
    std::vector<double> w;
    double b = 0.0; // score w.x + b > 0 predicts label 0
};
struct TreeState {
    Tree tree;
};
struct ForestState {
    std::vector<Tree> trees;
};
struct GbdtState {
    std::vector<Tree> trees;
    double f0 = 0.0;
    double shrinkage = 0.1;
};
struct MlpState {
    std::vector<Matrix> weights; // layer l: out x in
    std::vector<std::vector<double>> biases;
    Activation activation = Activation::logistic_act;
};
struct KsvmState {
    Matrix support_vectors;
    std::vector<double> coeffs; // alpha_i * t_i
    double bias = 0.0;
    Kernel kernel = Kernel::rbf;
    double gamma = 0.0;
    double coef0 = 0.0;
    int degree = 3;
};

using ModelState = std::variant<KnnState, NbcState, LinearState, TreeState, ForestState,
                                GbdtState, MlpState, KsvmState>;

/// A trained classifier: the fitted preprocessing pipeline, the
/// family-specific state, and training metadata. predict() accepts raw
/// feature rows of the same dimension the model was fitted on.
struct Model {
    Family family = Family::knn;
    AlgoConfig config;
    double train_seconds = 0.0;
    std::vector<int> feature_ids;
    size_t raw_dim = 0;
    std::string warning; // e.g. NonConvergence note

    bool booleanized = false;
    int bucket_table_version = 0;
    std::optional<ScalerModel> scaler;
    std::optional<ScalerModel> pca_scaler;
    std::optional<PcaModel> pca;

    ModelState state;
};

// ---------------------------------------------------------------------------
// operations

/// 1 / (1 + e^-z), stable across the double range.
double logistic(double z);

/// Log-space class scores log p(C_k) + sum_i log p(x_i | C_k) for k in {0,1}.
/// Raises Error{unfitted_model} when the state has no fitted likelihoods.
std::array<double, 2> bayes_posterior(const NbcState& nb, std::span<const double> x);

struct SplitResult {
    int feature = -1;
    double threshold = 0.0;
    double gain = 0.0;
};

/// Exhaustive scan over candidate thresholds (midpoints between sorted
/// distinct values per feature) maximizing impurity decrease; ties broken by
/// lowest feature index then lowest threshold. nullopt when no candidate
/// split exists (all points identical or min_leaf unsatisfiable).
std::optional<SplitResult> best_split(const Matrix& x, std::span<const int> labels,
                                      Criterion criterion, int min_leaf = 1);

/// Trains a model. Raises Error{single_class} when a family other than KNN
/// sees only one label, Error{unsupported_family} for the dl85 slot, and
/// Error{bad_k}/Error{dimension_mismatch} for pipeline misuse. A solver that
/// hits its iteration cap records a NonConvergence warning on the model.
Model fit(const AlgoConfig& config, const Dataset& data);

int predict(const Model& m, std::span<const double> x);
std::vector<int> predict_batch(const Model& m, const Matrix& x);

struct GridCell {
    AlgoConfig config;
    double mean_accuracy = 0.0;
    double mean_train_seconds = 0.0;
    bool failed = false;
    std::string error;
};

struct GridSearchResult {
    size_t best_index = 0;
    std::vector<GridCell> cells;
};

/// Scores every config by k-fold cross-validated mean accuracy; accuracy
/// ties go to the lower mean training time. Failing cells are recorded, not
/// fatal. Raises Error{bad_k} when folds < 2.
GridSearchResult grid_search(const std::vector<AlgoConfig>& grid, const Dataset& data,
                             size_t folds, uint64_t seed);

struct CvOutcome {
    double mean_accuracy = 0.0;
    double mean_train_seconds = 0.0;
    std::vector<MetricsReport> fold_metrics;
};
CvOutcome cross_validate(const AlgoConfig& config, const Dataset& data, size_t folds,
                         uint64_t seed);

// ---------------------------------------------------------------------------
// solver internals exposed for gradient verification

/// Mean negative log-likelihood of the logistic model p(target=1|x) =
/// logistic(w.x + b) plus (l2/2)|w|^2, with its analytic gradient.
double lr_nll_gradient(const Matrix& x, std::span<const int> targets, std::span<const double> w,
                       double b, double l2, std::span<double> grad_w, double& grad_b);

struct MlpArch {
    size_t input = 0;
    std::vector<int> hidden;

    size_t param_count() const;
};

/// Mean binary cross-entropy of the network on (x, y) plus (l2/2) sum of
/// squared weights, with the analytic gradient over the flattened
/// parameters (weights then biases per layer, output layer last).
double mlp_loss_gradient(const MlpArch& arch, Activation act, std::span<const double> params,
                         const Matrix& x, std::span<const int> y, double l2,
                         std::span<double> grad);

// ---------------------------------------------------------------------------
// serialization (versioned, self-describing)

std::string model_to_json(const Model& m);
Model model_from_json(const std::string& text);
void save_model(const Model& m, const std::string& path);
Model load_model(const std::string& path);

} // namespace packdet
