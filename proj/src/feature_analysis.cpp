#include "packdet/feature_analysis.hpp"

#include "packdet/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace packdet {

namespace {

// Column index ranges of the model's input space, one per raw feature. With
// boolean preprocessing a feature owns its one-hot group; otherwise exactly
// one column. Deleted features own an empty range.
std::vector<std::pair<size_t, size_t>> column_groups(const Model& m) {
    std::vector<std::pair<size_t, size_t>> groups;
    groups.reserve(m.feature_ids.size());
    if (!m.booleanized) {
        for (size_t i = 0; i < m.feature_ids.size(); ++i) groups.push_back({i, i + 1});
        return groups;
    }
    const BucketTable table = BucketTable::builtin();
    size_t off = 0;
    for (int id : m.feature_ids) {
        size_t width = static_cast<size_t>(table.group_size(id));
        groups.push_back({off, off + width});
        off += width;
    }
    return groups;
}

void tree_importance(const Tree& tree, std::vector<double>& acc) {
    if (tree.nodes.empty()) return;
    double n_root = static_cast<double>(tree.nodes[0].n_samples);
    if (n_root <= 0) return;
    for (const TreeNode& node : tree.nodes) {
        if (node.feature < 0) continue;
        const TreeNode& l = tree.nodes[static_cast<size_t>(node.left)];
        const TreeNode& r = tree.nodes[static_cast<size_t>(node.right)];
        double n = static_cast<double>(node.n_samples);
        double child = (static_cast<double>(l.n_samples) * l.impurity +
                        static_cast<double>(r.n_samples) * r.impurity) /
                       n;
        double decrease = node.impurity - child;
        acc[static_cast<size_t>(node.feature)] += (n / n_root) * decrease;
    }
}

std::vector<int> ranks_from_scores(const std::vector<double>& score,
                                   const std::vector<int>& ids) {
    std::vector<size_t> order(score.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) {
        if (score[a] != score[b]) return score[a] > score[b];
        return ids[a] < ids[b];
    });
    std::vector<int> rank(score.size());
    for (size_t pos = 0; pos < order.size(); ++pos) {
        rank[order[pos]] = static_cast<int>(pos) + 1;
    }
    return rank;
}

} // namespace

ImportanceRanking importance(const Model& m) {
    switch (m.family) {
        case Family::lr:
        case Family::lsvm:
        case Family::dt:
        case Family::rf:
        case Family::gbdt:
            break;
        default:
            raise(Errc::unsupported_family,
                  std::string(family_name(m.family)) + " exposes no coefficients or importances");
    }
    if (m.pca) {
        raise(Errc::unsupported_family, "principal components do not map back to features");
    }

    const size_t input_dim = [&] {
        if (!m.booleanized) return m.raw_dim;
        size_t d = 0;
        const BucketTable table = BucketTable::builtin();
        for (int id : m.feature_ids) d += static_cast<size_t>(table.group_size(id));
        return d;
    }();

    std::vector<double> col_score(input_dim, 0.0);
    if (m.family == Family::lr || m.family == Family::lsvm) {
        const LinearState& s = std::get<LinearState>(m.state);
        for (size_t c = 0; c < s.w.size(); ++c) col_score[c] = std::abs(s.w[c]);
    } else if (m.family == Family::dt) {
        tree_importance(std::get<TreeState>(m.state).tree, col_score);
    } else if (m.family == Family::rf) {
        const ForestState& s = std::get<ForestState>(m.state);
        std::vector<double> per_tree(input_dim);
        for (const Tree& t : s.trees) {
            std::fill(per_tree.begin(), per_tree.end(), 0.0);
            tree_importance(t, per_tree);
            for (size_t c = 0; c < input_dim; ++c) col_score[c] += per_tree[c];
        }
        for (double& v : col_score) v /= static_cast<double>(std::max<size_t>(s.trees.size(), 1));
    } else {
        const GbdtState& s = std::get<GbdtState>(m.state);
        for (const Tree& t : s.trees) tree_importance(t, col_score);
    }

    ImportanceRanking out;
    out.feature_ids = m.feature_ids;
    out.score.assign(m.feature_ids.size(), 0.0);
    auto groups = column_groups(m);
    for (size_t i = 0; i < groups.size(); ++i) {
        for (size_t c = groups[i].first; c < groups[i].second; ++c) out.score[i] += col_score[c];
    }
    if (m.family == Family::dt || m.family == Family::rf || m.family == Family::gbdt) {
        double total = std::accumulate(out.score.begin(), out.score.end(), 0.0);
        if (total > 0) {
            for (double& v : out.score) v /= total;
        }
    }
    out.rank = ranks_from_scores(out.score, out.feature_ids);
    return out;
}

TimeAccuracyRatio time_accuracy_ratio(double old_acc, double new_acc, double old_time,
                                      double new_time) {
    if (old_acc <= 0) raise(Errc::zero_accuracy, "baseline accuracy must be positive");
    if (old_time <= 0) raise(Errc::zero_train_time, "baseline time must be positive");

    double time_frac = (old_time - new_time) / old_time;
    double acc_frac = (old_acc - new_acc) / old_acc;

    TimeAccuracyRatio r;
    if (time_frac == 0.0 && acc_frac == 0.0) {
        r.unchanged = true;
        return r;
    }
    if (acc_frac <= 0.0) {
        r.improved = true;
        r.value = acc_frac == 0.0 ? -std::numeric_limits<double>::infinity()
                                  : time_frac / acc_frac;
        return r;
    }
    r.value = time_frac / acc_frac;
    return r;
}

std::vector<SelectionReport> select_by_threshold(const Model& m, const Dataset& data,
                                                 const std::vector<double>& thresholds,
                                                 double max_acc_drop, size_t folds,
                                                 uint64_t seed,
                                                 std::vector<std::string>* notes) {
    ImportanceRanking ranking = importance(m);
    CvOutcome baseline = cross_validate(m.config, data, folds, seed);

    std::vector<SelectionReport> kept;
    for (double threshold : thresholds) {
        std::vector<int> retained;
        for (size_t i = 0; i < ranking.feature_ids.size(); ++i) {
            if (ranking.score[i] >= threshold) retained.push_back(ranking.feature_ids[i]);
        }
        if (retained.empty()) {
            if (notes) {
                notes->push_back("threshold " + std::to_string(threshold) +
                                 ": EmptySelection, skipped");
            }
            continue;
        }
        Dataset reduced = data.select_features(retained);
        CvOutcome cv = cross_validate(m.config, reduced, folds, seed);
        double drop = (baseline.mean_accuracy - cv.mean_accuracy) / baseline.mean_accuracy;
        if (drop > max_acc_drop) {
            if (notes) {
                notes->push_back("threshold " + std::to_string(threshold) +
                                 ": accuracy drop above limit, dropped");
            }
            continue;
        }
        SelectionReport rep;
        rep.method = "k_best_threshold";
        rep.retained = std::move(retained);
        rep.old_accuracy = baseline.mean_accuracy;
        rep.new_accuracy = cv.mean_accuracy;
        rep.old_time = baseline.mean_train_seconds;
        rep.new_time = cv.mean_train_seconds;
        rep.ratio = time_accuracy_ratio(rep.old_accuracy, rep.new_accuracy, rep.old_time,
                                        rep.new_time);
        kept.push_back(std::move(rep));
    }
    return kept;
}

SelectionReport iterative_selection(const AlgoConfig& config, const Dataset& data,
                                    const std::vector<int>& k_schedule, size_t folds,
                                    uint64_t seed) {
    std::vector<int> current = data.feature_ids;
    for (int k : k_schedule) {
        if (k <= 0) raise(Errc::bad_argument, "iterative_selection: k must be positive");
        Dataset subset = data.select_features(current);
        Model m = fit(config, subset);
        ImportanceRanking ranking = importance(m);

        size_t keep = std::min<size_t>(static_cast<size_t>(k), current.size());
        std::vector<size_t> order(current.size());
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) {
            if (ranking.score[a] != ranking.score[b]) return ranking.score[a] > ranking.score[b];
            return ranking.feature_ids[a] < ranking.feature_ids[b];
        });
        std::vector<int> next;
        next.reserve(keep);
        for (size_t i = 0; i < keep; ++i) next.push_back(ranking.feature_ids[order[i]]);
        std::sort(next.begin(), next.end());
        if (next == current) break;
        current = std::move(next);
    }

    CvOutcome baseline = cross_validate(config, data, folds, seed);
    CvOutcome reduced = cross_validate(config, data.select_features(current), folds, seed);

    SelectionReport rep;
    rep.method = "iterative";
    rep.retained = current;
    rep.old_accuracy = baseline.mean_accuracy;
    rep.new_accuracy = reduced.mean_accuracy;
    rep.old_time = baseline.mean_train_seconds;
    rep.new_time = reduced.mean_train_seconds;
    rep.ratio =
        time_accuracy_ratio(rep.old_accuracy, rep.new_accuracy, rep.old_time, rep.new_time);
    return rep;
}

PcaSweepReport pca_sweep(const AlgoConfig& config, const Dataset& data,
                         const std::vector<int>& ks, size_t folds, uint64_t seed) {
    if (config.family == Family::bnbc || config.family == Family::dl85) {
        raise(Errc::unsupported_family, "family requires binary inputs, which PCA destroys");
    }
    if (ks.empty()) raise(Errc::bad_k, "pca_sweep: no component counts");
    for (int k : ks) {
        if (k < 1 || static_cast<size_t>(k) > data.dim()) {
            raise(Errc::bad_k, "pca_sweep: k outside [1, d]");
        }
    }

    AlgoConfig base = config;
    base.pca_components = 0;
    CvOutcome baseline = cross_validate(base, data, folds, seed);

    PcaSweepReport report;
    report.old_accuracy = baseline.mean_accuracy;
    report.old_time = baseline.mean_train_seconds;
    for (int k : ks) {
        AlgoConfig c = config;
        c.preprocessing = Preprocessing::zscore;
        c.pca_components = k;
        CvOutcome cv = cross_validate(c, data, folds, seed);
        report.rows.push_back({k, cv.mean_accuracy, cv.mean_train_seconds});
    }
    for (size_t i = 1; i < report.rows.size(); ++i) {
        const PcaSweepRow& cur = report.rows[i];
        const PcaSweepRow& best = report.rows[report.best_index];
        if (cur.accuracy > best.accuracy ||
            (cur.accuracy == best.accuracy && cur.train_seconds < best.train_seconds)) {
            report.best_index = i;
        }
    }
    const PcaSweepRow& best = report.rows[report.best_index];
    report.best_ratio = time_accuracy_ratio(report.old_accuracy, best.accuracy, report.old_time,
                                            best.train_seconds);
    return report;
}

} // namespace packdet
