#pragma once

#include "packdet/dataset.hpp"
#include "packdet/features.hpp"

#include <span>
#include <string>
#include <vector>

namespace packdet {

enum class BucketRule {
    already_boolean, // passes through as one bit
    deleted,         // dropped from the boolean representation
    value_buckets,   // listed exact values map to codes 1..n, anything else to 0
    threshold_buckets, // code = number of cutpoints <= value
    pivot_compare,   // below pivot -> 0, equal -> 1, above -> 2
    sentinel_bucket, // equal to the sentinel -> 1, anything else -> 0
};

struct BucketSpec {
    BucketRule rule = BucketRule::already_boolean;
    std::vector<double> params; // listed values / cutpoints / pivot / sentinel

    bool operator==(const BucketSpec&) const = default;
};

/// Per-feature bucketing rules driving the boolean conversion. The shipped
/// rule set lives in data/bucket_table_v1.tsv and is also built in; the two
/// are kept identical by test.
class BucketTable {
public:
    static BucketTable builtin();
    static BucketTable load(const std::string& path);
    void save(const std::string& path) const;

    int version() const { return version_; }
    const BucketSpec& spec(int feature_id) const;

    /// One-hot group size of a feature: 1 for pass-through booleans, 0 for
    /// deleted features, bucket count otherwise.
    int group_size(int feature_id) const;
    std::vector<int> group_sizes() const;

    /// Total dimension of the boolean representation over all 119 features.
    int boolean_dim() const;

    /// Bucket code for a feature value. Raises Error{deleted_feature} for
    /// deleted features.
    int bucketize(int feature_id, double value) const;

    /// One-hot expansion of the listed features, in listed order. Every
    /// expanded group has exactly one bit set; pass-through booleans
    /// contribute their own bit.
    std::vector<double> booleanize_row(std::span<const double> values,
                                       std::span<const int> feature_ids) const;
    std::vector<double> booleanize(const FeatureVector& v) const;
    Matrix booleanize_matrix(const Matrix& m, std::span<const int> feature_ids) const;

    bool operator==(const BucketTable&) const = default;

private:
    int version_ = 1;
    std::vector<BucketSpec> specs_; // index = feature id - 1
};

enum class ScalerMode { minmax, zscore };

struct ScalerModel {
    ScalerMode mode = ScalerMode::minmax;
    std::vector<double> a; // min or mean, per column
    std::vector<double> b; // max or std, per column

    size_t dim() const { return a.size(); }
};

/// Column statistics over a non-empty training matrix. minmax maps the
/// training min/max to 0/1 (constant columns to 0); zscore maps to
/// (x - mean) / std (zero-variance columns to 0). Raises Error{empty_matrix}.
ScalerModel fit_scaler(ScalerMode mode, const Matrix& m);

/// Never fails on out-of-range values; minmax outputs may leave [0,1] on
/// unseen data (no clamping).
std::vector<double> apply_scaler(const ScalerModel& s, std::span<const double> x);
Matrix apply_scaler(const ScalerModel& s, const Matrix& m);

struct PcaModel {
    std::vector<double> mean;                // d
    Matrix components;                       // k x d, rows orthonormal
    std::vector<double> explained_variance;  // k, non-increasing
};

/// Top-k principal components of the sample covariance, eigen-decomposed
/// with a cyclic Jacobi solver. Expects standardized input (callers scale
/// first). Raises Error{bad_k} unless 1 <= k <= min(rows, cols).
PcaModel pca_fit(const Matrix& m, size_t k);

std::vector<double> pca_transform(const PcaModel& p, std::span<const double> x);
Matrix pca_transform(const PcaModel& p, const Matrix& m);

/// Back-projection components^T * y + mean (exact inverse when k = d).
std::vector<double> pca_inverse_transform(const PcaModel& p, std::span<const double> y);

/// Eigen-decomposition of a symmetric matrix: returns {eigenvalues,
/// eigenvectors-as-rows}, sorted by descending eigenvalue.
void symmetric_eigen(const Matrix& sym, std::vector<double>& eigenvalues, Matrix& eigenvectors);

} // namespace packdet
