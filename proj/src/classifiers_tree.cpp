#include "packdet/error.hpp"

#include "classifiers_impl.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace packdet {

double Tree::predict_value(std::span<const double> x) const {
    int node = 0;
    while (nodes[static_cast<size_t>(node)].feature >= 0) {
        const TreeNode& n = nodes[static_cast<size_t>(node)];
        node = x[static_cast<size_t>(n.feature)] < n.threshold ? n.left : n.right;
    }
    return nodes[static_cast<size_t>(node)].value;
}

namespace detail {

namespace {

// Impurity from integer-valued sums so identical counts always produce
// identical doubles, whatever path computed them.
double class_impurity(Criterion criterion, double n, double count1) {
    if (n <= 0) return 0.0;
    double p1 = count1 / n;
    double p0 = 1.0 - p1;
    if (criterion == Criterion::gini) return 1.0 - p0 * p0 - p1 * p1;
    double h = 0.0;
    if (p0 > 0) h -= p0 * std::log2(p0);
    if (p1 > 0) h -= p1 * std::log2(p1);
    return h;
}

double regression_impurity(double n, double sum, double sum_sq) {
    if (n <= 0) return 0.0;
    double mean = sum / n;
    return std::max(sum_sq / n - mean * mean, 0.0);
}

struct NodeStats {
    double n = 0, sum = 0, sum_sq = 0;

    void add(double t) {
        n += 1;
        sum += t;
        sum_sq += t * t;
    }
    double impurity(const TreeParams& p) const {
        return p.regression ? regression_impurity(n, sum, sum_sq)
                            : class_impurity(p.criterion, n, sum);
    }
};

struct BestSplit {
    int feature = -1;
    double threshold = 0.0;
    double gain = 0.0;
};

// Scans features in ascending index order and thresholds in ascending value
// order; strict improvement keeps the first best, which implements the
// lowest-feature / lowest-threshold tie-break.
std::optional<BestSplit> scan_splits(const Matrix& x, std::span<const double> targets,
                                     std::span<const size_t> idx,
                                     std::span<const int> features, const TreeParams& params) {
    NodeStats total;
    for (size_t i : idx) total.add(targets[i]);
    double parent_impurity = total.impurity(params);

    BestSplit best;
    std::vector<std::pair<double, double>> vals(idx.size()); // (value, target)
    for (int f : features) {
        for (size_t k = 0; k < idx.size(); ++k) {
            vals[k] = {x.at(idx[k], static_cast<size_t>(f)), targets[idx[k]]};
        }
        std::sort(vals.begin(), vals.end());
        NodeStats left;
        for (size_t k = 0; k + 1 < vals.size(); ++k) {
            left.add(vals[k].second);
            if (vals[k].first == vals[k + 1].first) continue;
            double n_left = left.n;
            double n_right = total.n - n_left;
            if (n_left < params.min_leaf || n_right < params.min_leaf) continue;
            NodeStats right{total.n - left.n, total.sum - left.sum, total.sum_sq - left.sum_sq};
            double child =
                (n_left * left.impurity(params) + n_right * right.impurity(params)) / total.n;
            double gain = parent_impurity - child;
            double threshold = vals[k].first + (vals[k + 1].first - vals[k].first) / 2.0;
            if (gain > best.gain + 1e-15 && gain > 1e-12) {
                best = {f, threshold, gain};
            }
        }
    }
    if (best.feature < 0) return std::nullopt;
    return best;
}

struct Builder {
    const Matrix& x;
    std::span<const double> targets;
    const TreeParams& params;
    Rng* rng;
    Tree tree;

    int build(std::vector<size_t>& idx, int depth) {
        NodeStats stats;
        for (size_t i : idx) stats.add(targets[i]);

        TreeNode node;
        node.n_samples = idx.size();
        node.impurity = stats.impurity(params);
        node.value = leaf_value(stats);

        bool at_depth = params.max_depth > 0 && depth >= params.max_depth;
        std::optional<BestSplit> split;
        if (!at_depth && node.impurity > 0 && idx.size() >= 2 * static_cast<size_t>(params.min_leaf)) {
            split = scan_splits(x, targets, idx, candidate_features(), params);
        }
        int self = static_cast<int>(tree.nodes.size());
        tree.nodes.push_back(node);
        if (!split) return self;

        std::vector<size_t> left_idx, right_idx;
        for (size_t i : idx) {
            if (x.at(i, static_cast<size_t>(split->feature)) < split->threshold) {
                left_idx.push_back(i);
            } else {
                right_idx.push_back(i);
            }
        }
        tree.nodes[static_cast<size_t>(self)].feature = split->feature;
        tree.nodes[static_cast<size_t>(self)].threshold = split->threshold;
        int left = build(left_idx, depth + 1);
        int right = build(right_idx, depth + 1);
        tree.nodes[static_cast<size_t>(self)].left = left;
        tree.nodes[static_cast<size_t>(self)].right = right;
        return self;
    }

    double leaf_value(const NodeStats& stats) const {
        if (params.regression) return stats.n > 0 ? stats.sum / stats.n : 0.0;
        return stats.sum * 2.0 > stats.n ? 1.0 : 0.0; // majority, ties to 0
    }

    std::vector<int> candidate_features() const {
        std::vector<int> feats(x.cols);
        std::iota(feats.begin(), feats.end(), 0);
        if (params.max_features <= 0 || params.max_features >= static_cast<int>(x.cols)) {
            return feats;
        }
        // partial Fisher-Yates draw without replacement, then sorted so the
        // tie-break stays "lowest feature index"
        for (int i = 0; i < params.max_features; ++i) {
            size_t j = static_cast<size_t>(i) +
                       static_cast<size_t>(rng->below(feats.size() - static_cast<size_t>(i)));
            std::swap(feats[static_cast<size_t>(i)], feats[j]);
        }
        feats.resize(static_cast<size_t>(params.max_features));
        std::sort(feats.begin(), feats.end());
        return feats;
    }
};

} // namespace

Tree build_tree(const Matrix& x, std::span<const double> targets, const TreeParams& params,
                Rng* rng) {
    Builder b{x, targets, params, rng, {}};
    std::vector<size_t> idx(x.rows);
    std::iota(idx.begin(), idx.end(), 0);
    b.build(idx, 0);
    return std::move(b.tree);
}

TreeState fit_dt(const FitContext& ctx, const Matrix& x, const std::vector<int>& y) {
    std::vector<double> targets(y.begin(), y.end());
    TreeParams params{ctx.config.criterion, false, ctx.config.max_depth,
                      std::max(ctx.config.min_leaf, 1), 0};
    return {build_tree(x, targets, params, nullptr)};
}

ForestState fit_rf(const FitContext& ctx, const Matrix& x, const std::vector<int>& y) {
    ForestState s;
    const size_t n = x.rows;
    int max_features = 0;
    if (ctx.config.feature_subsampling) {
        max_features = static_cast<int>(
            std::ceil(std::sqrt(static_cast<double>(x.cols))));
    }
    TreeParams params{ctx.config.criterion, false, ctx.config.max_depth,
                      std::max(ctx.config.min_leaf, 1), max_features};

    for (int t = 0; t < ctx.config.n_estimators; ++t) {
        Rng tree_rng(ctx.rng.derive(static_cast<uint64_t>(t)));
        Matrix bx;
        std::vector<double> bt;
        if (ctx.config.bootstrap) {
            bx = Matrix(n, x.cols);
            bt.resize(n);
            for (size_t i = 0; i < n; ++i) {
                size_t j = static_cast<size_t>(tree_rng.below(n));
                std::copy_n(x.row(j).begin(), x.cols, bx.row(i).begin());
                bt[i] = static_cast<double>(y[j]);
            }
            s.trees.push_back(build_tree(bx, bt, params, &tree_rng));
        } else {
            std::vector<double> targets(y.begin(), y.end());
            s.trees.push_back(build_tree(x, targets, params, &tree_rng));
        }
    }
    return s;
}

GbdtState fit_gbdt(const FitContext& ctx, const Matrix& x, const std::vector<int>& y) {
    const size_t n = x.rows;
    GbdtState s;
    s.shrinkage = ctx.config.learning_rate;

    double mean = 0.0;
    for (int v : y) mean += v;
    mean = std::clamp(mean / static_cast<double>(n), 1e-6, 1.0 - 1e-6);
    s.f0 = std::log(mean / (1.0 - mean));

    TreeParams params{Criterion::entropy, true, ctx.config.max_depth,
                      std::max(ctx.config.min_leaf, 1), 0};
    std::vector<double> f(n, s.f0), residual(n);
    for (int t = 0; t < ctx.config.n_estimators; ++t) {
        for (size_t i = 0; i < n; ++i) residual[i] = y[i] - logistic(f[i]);
        Tree tree = build_tree(x, residual, params, nullptr);

        // Newton step per leaf: sum residual / sum p(1-p)
        std::vector<double> num(tree.nodes.size(), 0.0), den(tree.nodes.size(), 0.0);
        std::vector<int> leaf_of(n);
        for (size_t i = 0; i < n; ++i) {
            int node = 0;
            while (tree.nodes[static_cast<size_t>(node)].feature >= 0) {
                const TreeNode& nd = tree.nodes[static_cast<size_t>(node)];
                node = x.at(i, static_cast<size_t>(nd.feature)) < nd.threshold ? nd.left
                                                                               : nd.right;
            }
            leaf_of[i] = node;
            double p = logistic(f[i]);
            num[static_cast<size_t>(node)] += residual[i];
            den[static_cast<size_t>(node)] += p * (1.0 - p);
        }
        for (size_t k = 0; k < tree.nodes.size(); ++k) {
            if (tree.nodes[k].feature < 0) {
                tree.nodes[k].value = num[k] / std::max(den[k], 1e-12);
            }
        }
        for (size_t i = 0; i < n; ++i) {
            f[i] += s.shrinkage * tree.nodes[static_cast<size_t>(leaf_of[i])].value;
        }
        s.trees.push_back(std::move(tree));
    }
    return s;
}

int predict_tree(const TreeState& s, std::span<const double> x) {
    return s.tree.predict_value(x) > 0.5 ? 1 : 0;
}

int predict_forest(const ForestState& s, std::span<const double> x) {
    int votes[2] = {0, 0};
    for (const Tree& t : s.trees) {
        ++votes[t.predict_value(x) > 0.5 ? 1 : 0];
    }
    return votes[1] > votes[0] ? 1 : 0;
}

int predict_gbdt(const GbdtState& s, std::span<const double> x) {
    double f = s.f0;
    for (const Tree& t : s.trees) f += s.shrinkage * t.predict_value(x);
    return f > 0.0 ? 1 : 0;
}

} // namespace detail

std::optional<SplitResult> best_split(const Matrix& x, std::span<const int> labels,
                                      Criterion criterion, int min_leaf) {
    if (x.rows < 2 || labels.size() != x.rows) {
        raise(Errc::bad_argument, "best_split: need >= 2 aligned points");
    }
    std::vector<double> targets(labels.begin(), labels.end());
    std::vector<size_t> idx(x.rows);
    std::iota(idx.begin(), idx.end(), 0);
    std::vector<int> features(x.cols);
    std::iota(features.begin(), features.end(), 0);
    detail::TreeParams params{criterion, false, 0, std::max(min_leaf, 1), 0};
    auto best = detail::scan_splits(x, targets, idx, features, params);
    if (!best) return std::nullopt;
    return SplitResult{best->feature, best->threshold, best->gain};
}

} // namespace packdet
