#pragma once

#include "packdet/classifiers.hpp"
#include "packdet/rng.hpp"

namespace packdet::detail {

struct FitContext {
    const AlgoConfig& config;
    Rng& rng;
    std::string& warning;
};

KnnState fit_knn(const FitContext& ctx, const Matrix& x, const std::vector<int>& y);
NbcState fit_gnbc(const FitContext& ctx, const Matrix& x, const std::vector<int>& y);
NbcState fit_bnbc(const FitContext& ctx, const Matrix& x, const std::vector<int>& y);
LinearState fit_lr(const FitContext& ctx, const Matrix& x, const std::vector<int>& y);
LinearState fit_lsvm(const FitContext& ctx, const Matrix& x, const std::vector<int>& y);
TreeState fit_dt(const FitContext& ctx, const Matrix& x, const std::vector<int>& y);
ForestState fit_rf(const FitContext& ctx, const Matrix& x, const std::vector<int>& y);
GbdtState fit_gbdt(const FitContext& ctx, const Matrix& x, const std::vector<int>& y);
MlpState fit_mlp(const FitContext& ctx, const Matrix& x, const std::vector<int>& y);
KsvmState fit_ksvm(const FitContext& ctx, const Matrix& x, const std::vector<int>& y);

int predict_knn(const KnnState& s, int k, std::span<const double> x);
int predict_nbc(const NbcState& s, std::span<const double> x);
int predict_linear(const LinearState& s, std::span<const double> x);
int predict_tree(const TreeState& s, std::span<const double> x);
int predict_forest(const ForestState& s, std::span<const double> x);
int predict_gbdt(const GbdtState& s, std::span<const double> x);
int predict_mlp(const MlpState& s, std::span<const double> x);
int predict_ksvm(const KsvmState& s, std::span<const double> x);

// Shared tree building. Classification targets are 0/1 labels; regression
// targets are residuals. max_features 0 means all features.
struct TreeParams {
    Criterion criterion = Criterion::entropy;
    bool regression = false;
    int max_depth = 0; // 0 = unlimited
    int min_leaf = 1;
    int max_features = 0;
};

Tree build_tree(const Matrix& x, std::span<const double> targets, const TreeParams& params,
                Rng* rng);

double kernel_eval(Kernel kernel, double gamma, double coef0, int degree,
                   std::span<const double> a, std::span<const double> b);

} // namespace packdet::detail
