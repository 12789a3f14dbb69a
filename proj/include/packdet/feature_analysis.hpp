#pragma once

#include "packdet/classifiers.hpp"
#include "packdet/dataset.hpp"

#include <string>
#include <vector>

namespace packdet {

/// Per-feature relevance scores for one trained model, aligned with
/// feature_ids. Linear families score |coefficient| (one-hot groups summed
/// back onto their source feature); tree families score the share of total
/// impurity decrease, normalized to sum 1. rank is 1-based, ties broken by
/// lower feature id.
struct ImportanceRanking {
    std::vector<int> feature_ids;
    std::vector<double> score;
    std::vector<int> rank;
};

/// Raises Error{unsupported_family} for families without coefficients or
/// importances (KNN, NBC, MLP, KSVM) and for PCA-composed models, whose
/// columns no longer map back to features.
ImportanceRanking importance(const Model& m);

struct TimeAccuracyRatio {
    double value = 0.0;    // signed; negative when accuracy improved
    bool improved = false; // display marker "(-)"
    bool unchanged = false;

    double magnitude() const { return value < 0 ? -value : value; }
};

/// ((old_time - new_time)/old_time) / ((old_acc - new_acc)/old_acc).
/// An accuracy improvement flips the sign and sets the improved marker; both
/// quantities unchanged reports 0 with the unchanged marker. Raises
/// Error{zero_accuracy} / Error{zero_train_time} on non-positive baselines.
TimeAccuracyRatio time_accuracy_ratio(double old_acc, double new_acc, double old_time,
                                      double new_time);

struct SelectionReport {
    std::string method; // "k_best_threshold" or "iterative"
    std::vector<int> retained;
    double old_accuracy = 0.0, new_accuracy = 0.0;
    double old_time = 0.0, new_time = 0.0;
    TimeAccuracyRatio ratio;
};

/// For each ascending threshold, keeps the features scoring at least that
/// much, retrains with cross-validation and reports the combinations whose
/// accuracy drop stays within max_acc_drop (a fraction of the baseline).
/// Thresholds that empty the selection are skipped with a note.
std::vector<SelectionReport> select_by_threshold(const Model& m, const Dataset& data,
                                                 const std::vector<double>& thresholds,
                                                 double max_acc_drop, size_t folds,
                                                 uint64_t seed,
                                                 std::vector<std::string>* notes = nullptr);

/// Repeatedly trains, keeps the top-k features of the running set per
/// schedule entry, and stops when the set is stable or the schedule is
/// exhausted; the report compares the final subset against the full set.
SelectionReport iterative_selection(const AlgoConfig& config, const Dataset& data,
                                    const std::vector<int>& k_schedule, size_t folds,
                                    uint64_t seed);

struct PcaSweepRow {
    int k = 0;
    double accuracy = 0.0;
    double train_seconds = 0.0;
};

struct PcaSweepReport {
    double old_accuracy = 0.0;
    double old_time = 0.0;
    std::vector<PcaSweepRow> rows;
    size_t best_index = 0;
    TimeAccuracyRatio best_ratio;
};

/// Standardizes, fits PCA per component count and cross-validates the family
/// on the projected data; best row by accuracy, then training time. Raises
/// Error{unsupported_family} for binary-input families (BNBC, DL85) and
/// Error{bad_k} for component counts outside [1, d].
PcaSweepReport pca_sweep(const AlgoConfig& config, const Dataset& data,
                         const std::vector<int>& ks, size_t folds, uint64_t seed);

} // namespace packdet
