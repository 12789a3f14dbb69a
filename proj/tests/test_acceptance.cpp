#include "packdet/classifiers.hpp"
#include "packdet/corpus.hpp"
#include "packdet/drift.hpp"
#include "packdet/error.hpp"
#include "packdet/feature_analysis.hpp"
#include "packdet/labeling.hpp"
#include "packdet/metrics.hpp"
#include "packdet/preprocess.hpp"
#include "packdet/rng.hpp"

#include "test_util.hpp"

#include <doctest.h>

#include <Eigen/Dense>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <memory>
#include <numeric>

using namespace packdet;

namespace {

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

void report_pass(const char* text) { std::printf("[PASS] %s\n", text); }

// independent brute-force greedy tree for criterion 4 (recomputes every
// candidate split from scratch)
struct RefNode {
    int feature = -1;
    double threshold = 0.0;
    int label = 0;
    std::unique_ptr<RefNode> left, right;
};

double ref_entropy(size_t n, size_t ones) {
    if (n == 0) return 0.0;
    double p1 = static_cast<double>(ones) / static_cast<double>(n);
    double p0 = 1.0 - p1;
    double h = 0.0;
    if (p0 > 0) h -= p0 * std::log2(p0);
    if (p1 > 0) h -= p1 * std::log2(p1);
    return h;
}

std::unique_ptr<RefNode> ref_build(const std::vector<std::vector<double>>& x,
                                   const std::vector<int>& y, const std::vector<size_t>& idx,
                                   int depth, int max_depth) {
    auto node = std::make_unique<RefNode>();
    size_t ones = 0;
    for (size_t i : idx) ones += static_cast<size_t>(y[i]);
    node->label = 2 * ones > idx.size() ? 1 : 0;
    double parent = ref_entropy(idx.size(), ones);
    if (depth >= max_depth || parent == 0.0) return node;

    int best_feature = -1;
    double best_threshold = 0.0, best_gain = 0.0;
    for (size_t f = 0; f < x[0].size(); ++f) {
        std::vector<double> values;
        for (size_t i : idx) values.push_back(x[i][f]);
        std::sort(values.begin(), values.end());
        values.erase(std::unique(values.begin(), values.end()), values.end());
        for (size_t v = 0; v + 1 < values.size(); ++v) {
            double threshold = values[v] + (values[v + 1] - values[v]) / 2.0;
            size_t nl = 0, ol = 0, nr = 0, orr = 0;
            for (size_t i : idx) {
                if (x[i][f] < threshold) {
                    ++nl;
                    ol += static_cast<size_t>(y[i]);
                } else {
                    ++nr;
                    orr += static_cast<size_t>(y[i]);
                }
            }
            if (nl == 0 || nr == 0) continue;
            double child = (static_cast<double>(nl) * ref_entropy(nl, ol) +
                            static_cast<double>(nr) * ref_entropy(nr, orr)) /
                           static_cast<double>(idx.size());
            double gain = parent - child;
            if (gain > 1e-12 && gain > best_gain) {
                best_gain = gain;
                best_feature = static_cast<int>(f);
                best_threshold = threshold;
            }
        }
    }
    if (best_feature < 0) return node;
    node->feature = best_feature;
    node->threshold = best_threshold;
    std::vector<size_t> li, ri;
    for (size_t i : idx) {
        (x[i][static_cast<size_t>(best_feature)] < best_threshold ? li : ri).push_back(i);
    }
    node->left = ref_build(x, y, li, depth + 1, max_depth);
    node->right = ref_build(x, y, ri, depth + 1, max_depth);
    return node;
}

bool ref_identical(const Tree& tree, int node_id, const RefNode& ref) {
    const TreeNode& n = tree.nodes[static_cast<size_t>(node_id)];
    if (ref.feature < 0) return n.feature < 0 && n.value == static_cast<double>(ref.label);
    if (n.feature != ref.feature || n.threshold != ref.threshold) return false;
    return ref_identical(tree, n.left, *ref.left) && ref_identical(tree, n.right, *ref.right);
}

int ref_predict(const RefNode& node, const std::vector<double>& x) {
    if (node.feature < 0) return node.label;
    return x[static_cast<size_t>(node.feature)] < node.threshold ? ref_predict(*node.left, x)
                                                                 : ref_predict(*node.right, x);
}

int vote_count_oracle(unsigned mask, int voters) {
    int packed = 0;
    for (int i = 0; i < voters; ++i) packed += (mask >> i) & 1;
    return packed;
}

} // namespace

TEST_SUITE("acceptance") {

TEST_CASE("criterion 1: detailed-metrics F-scores recompute from precision/recall") {
    auto t0 = std::chrono::steady_clock::now();
    struct Row {
        const char* family;
        double pp, rp, fp, pnp, rnp, fnp;
    };
    const Row rows[] = {
        {"KNN", 0.9746, 0.9867, 0.9806, 0.9955, 0.9913, 0.9934},
        {"GNBC", 0.7882, 0.8487, 0.8173, 0.9478, 0.9234, 0.9354},
        {"BNBC", 0.8091, 0.9219, 0.8619, 0.9728, 0.9278, 0.9498},
        {"LR", 0.9415, 0.9407, 0.9411, 0.9801, 0.9803, 0.9802},
        {"LSVM", 0.9393, 0.9432, 0.9412, 0.9809, 0.9795, 0.9802},
        {"DT", 0.9119, 0.9225, 0.9172, 0.9738, 0.9700, 0.9719},
        {"RF", 0.9733, 0.9543, 0.9637, 0.9847, 0.9912, 0.9880},
        {"GBDT", 0.9844, 0.9676, 0.9759, 0.9892, 0.9948, 0.9920},
        {"DL85", 0.9473, 0.8276, 0.8834, 0.9451, 0.9847, 0.9645},
        {"MLP", 0.9729, 0.9805, 0.9767, 0.9934, 0.9908, 0.9921},
        {"KSVM", 0.9875, 0.9843, 0.9859, 0.9947, 0.9958, 0.9952},
    };
    for (const Row& r : rows) {
        CAPTURE(r.family);
        REQUIRE(std::abs(fscore(r.pp, r.rp) - r.fp) <= 5e-4);
        REQUIRE(std::abs(fscore(r.pnp, r.rnp) - r.fnp) <= 5e-4);
    }
    REQUIRE(seconds_since(t0) < 1.0);
    report_pass("criterion 1: all eleven F-score rows recompute within 5e-4");
}

TEST_CASE("criterion 2: selection-table ratios recompute from accuracy/time pairs") {
    auto t0 = std::chrono::steady_clock::now();
    double dt = time_accuracy_ratio(0.8572, 0.8556, 0.1797, 0.0218).value;
    REQUIRE(std::abs(dt - 470.0) / 470.0 <= 0.02);
    double gbdt = time_accuracy_ratio(0.8657, 0.8656, 9.6522, 2.6470).value;
    REQUIRE(std::abs(gbdt - 6283.0) / 6283.0 <= 0.02);
    REQUIRE(seconds_since(t0) < 1.0);
    report_pass("criterion 2: DT ratio ~470 and GBDT ratio ~6283 within 2%");
}

TEST_CASE("criterion 3: economics ratios and the not-reached path") {
    auto t0 = std::chrono::steady_clock::now();
    double knn = economics_ratio(8986447, 2.1259);
    REQUIRE(std::abs(knn - 4227126.0) / 4227126.0 <= 1e-3);

    // a curve that never drops below the threshold inside the horizon maps
    // to the table's N/A marker
    auto never = uptime({0.0, -1e-10, 0.93}, 0.92, 1e7);
    REQUIRE_FALSE(never.has_value());
    REQUIRE(seconds_since(t0) < 1.0);
    report_pass("criterion 3: KNN ratio within 0.1% and the N/A cell via NotReached");
}

TEST_CASE("criterion 4: shallow trees match the exhaustive oracle") {
    Rng rng(4040);
    int checked = 0;
    for (int round = 0; round < 200; ++round) {
        size_t n = 2 + rng.below(5); // up to 6 samples
        std::vector<std::vector<double>> rows(n, std::vector<double>(3));
        std::vector<int> labels(n);
        for (size_t r = 0; r < n; ++r) {
            labels[r] = static_cast<int>(rng.below(2));
            for (auto& v : rows[r]) v = static_cast<double>(rng.below(10));
        }
        bool two = false;
        for (int l : labels) two = two || l != labels[0];
        if (!two) continue;

        AlgoConfig config = preset(Family::dt);
        config.max_depth = 2;
        config.min_leaf = 1;
        Dataset data = testutil::dataset_from_rows(rows, labels);
        Model m = fit(config, data);
        const Tree& tree = std::get<TreeState>(m.state).tree;

        std::vector<size_t> idx(n);
        std::iota(idx.begin(), idx.end(), 0);
        auto ref = ref_build(rows, labels, idx, 0, 2);

        REQUIRE(ref_identical(tree, 0, *ref));
        size_t mine_loss = 0, ref_loss = 0;
        for (size_t r = 0; r < n; ++r) {
            mine_loss += predict(m, rows[r]) != labels[r];
            ref_loss += ref_predict(*ref, rows[r]) != labels[r];
        }
        REQUIRE(mine_loss == ref_loss);
        ++checked;
    }
    REQUIRE(checked >= 150);
    report_pass("criterion 4: depth-2 trees identical to the brute-force oracle");
}

TEST_CASE("criterion 5: analytic gradients match central finite differences") {
    Rng rng(5050);
    auto fd_error = [](std::span<const double> a, std::span<const double> n) {
        double diff = 0, norm = 0;
        for (size_t i = 0; i < a.size(); ++i) {
            diff += (a[i] - n[i]) * (a[i] - n[i]);
            norm += n[i] * n[i];
        }
        return std::sqrt(diff) / std::max(std::sqrt(norm), 1e-12);
    };

    for (int round = 0; round < 20; ++round) {
        size_t n = 8, d = 3;
        Matrix x(n, d);
        for (double& v : x.data) v = rng.gaussian();
        std::vector<int> t(n);
        for (int& v : t) v = static_cast<int>(rng.below(2));
        std::vector<double> w(d);
        for (double& v : w) v = rng.gaussian();
        double b = rng.gaussian();

        std::vector<double> gw(d);
        double gb = 0;
        lr_nll_gradient(x, t, w, b, 0.01, gw, gb);
        std::vector<double> analytic(gw.begin(), gw.end());
        analytic.push_back(gb);

        const double h = 1e-6;
        std::vector<double> numeric(d + 1), scratch(d);
        double dummy;
        for (size_t i = 0; i <= d; ++i) {
            std::vector<double> wp = w, wm = w;
            double bp = b, bm = b;
            if (i < d) {
                wp[i] += h;
                wm[i] -= h;
            } else {
                bp += h;
                bm -= h;
            }
            numeric[i] = (lr_nll_gradient(x, t, wp, bp, 0.01, scratch, dummy) -
                          lr_nll_gradient(x, t, wm, bm, 0.01, scratch, dummy)) /
                         (2 * h);
        }
        REQUIRE(fd_error(analytic, numeric) <= 1e-5);
    }

    MlpArch arch{2, {3}};
    for (int round = 0; round < 20; ++round) {
        Matrix x(6, 2);
        for (double& v : x.data) v = rng.gaussian();
        std::vector<int> y(6);
        for (int& v : y) v = static_cast<int>(rng.below(2));
        std::vector<double> params(arch.param_count());
        for (double& v : params) v = rng.gaussian() * 0.5;

        std::vector<double> grad(params.size()), numeric(params.size()),
            scratch(params.size());
        mlp_loss_gradient(arch, Activation::logistic_act, params, x, y, 1e-3, grad);
        const double h = 1e-6;
        for (size_t i = 0; i < params.size(); ++i) {
            auto pp = params, pm = params;
            pp[i] += h;
            pm[i] -= h;
            numeric[i] =
                (mlp_loss_gradient(arch, Activation::logistic_act, pp, x, y, 1e-3, scratch) -
                 mlp_loss_gradient(arch, Activation::logistic_act, pm, x, y, 1e-3, scratch)) /
                (2 * h);
        }
        REQUIRE(fd_error(grad, numeric) <= 1e-4);
    }
    report_pass("criterion 5: LR within 1e-5 and MLP within 1e-4 of finite differences");
}

TEST_CASE("criterion 6: entropy closed forms and eigen-checked PCA") {
    std::vector<uint8_t> uniform(256);
    std::iota(uniform.begin(), uniform.end(), 0);
    REQUIRE(shannon_entropy(uniform) == 8.0);
    std::vector<uint8_t> zeros(1024, 0);
    REQUIRE(shannon_entropy(zeros) == 0.0);
    std::vector<uint8_t> aabb = {'a', 'a', 'b', 'b'};
    REQUIRE(shannon_entropy(aabb) == 1.0);

    Rng rng(6060);
    for (int round = 0; round < 20; ++round) {
        size_t n = 25 + rng.below(40), d = 3 + rng.below(8);
        Matrix m(n, d);
        for (double& v : m.data) v = rng.gaussian() * (0.5 + rng.unit());
        PcaModel p = pca_fit(m, d);

        for (size_t i = 0; i < d; ++i) {
            if (i + 1 < d) REQUIRE(p.explained_variance[i] >= p.explained_variance[i + 1]);
            for (size_t j = 0; j < d; ++j) {
                double dot = 0;
                for (size_t c = 0; c < d; ++c) {
                    dot += p.components.at(i, c) * p.components.at(j, c);
                }
                REQUIRE(std::abs(dot - (i == j ? 1.0 : 0.0)) <= 1e-8);
            }
        }

        Eigen::MatrixXd x(n, d);
        for (size_t r = 0; r < n; ++r) {
            for (size_t c = 0; c < d; ++c) {
                x(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = m.at(r, c);
            }
        }
        Eigen::MatrixXd centered = x.rowwise() - x.colwise().mean();
        Eigen::MatrixXd cov = centered.transpose() * centered / static_cast<double>(n - 1);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
        REQUIRE(solver.info() == Eigen::Success);
        for (size_t i = 0; i < d; ++i) {
            double oracle = solver.eigenvalues()(static_cast<Eigen::Index>(d - 1 - i));
            REQUIRE(std::abs(p.explained_variance[i] - oracle) <= 1e-9);
        }
    }
    report_pass("criterion 6: exact entropies; PCA orthonormal and eigen-consistent");
}

TEST_CASE("criterion 7: the shipped presets separate a 2,000-sample corpus") {
    auto t0 = std::chrono::steady_clock::now();
    corpus::Scenario sc = corpus::scenario_default(2000, 70707);
    Dataset data = testutil::extract_scenario(sc);
    REQUIRE(data.size() == 2000);
    size_t packed = 0;
    for (int y : data.labels) packed += static_cast<size_t>(y);
    REQUIRE(packed == 1000);

    for (Family family : {Family::knn, Family::rf, Family::gbdt, Family::mlp, Family::ksvm}) {
        AlgoConfig config = preset(family);
        config.seed = 7;
        CvOutcome cv = cross_validate(config, data, 10, 7);
        CAPTURE(family_name(family));
        REQUIRE(cv.mean_accuracy >= 0.95);
        std::printf("  %-5s 10-fold accuracy %.4f (mean fit %.3fs)\n", family_name(family),
                    cv.mean_accuracy, cv.mean_train_seconds);
    }
    double elapsed = seconds_since(t0);
    REQUIRE(elapsed <= 600.0);
    std::printf("  criterion 7 wall time: %.1fs\n", elapsed);
    report_pass("criterion 7: KNN/RF/GBDT/MLP/KSVM presets all at accuracy >= 0.95");
}

TEST_CASE("criterion 8: every family decays on the planted drift") {
    corpus::Scenario sc = corpus::scenario_drift(600, 200, 80808);
    Dataset all = testutil::extract_scenario(sc);

    // the scenario orders samples baseline first, then period1..4
    std::vector<size_t> base_idx(600);
    std::iota(base_idx.begin(), base_idx.end(), 0);
    Dataset baseline = all.select_rows(base_idx);
    std::vector<Dataset> periods;
    for (int p = 0; p < 4; ++p) {
        std::vector<size_t> idx(200);
        std::iota(idx.begin(), idx.end(), 600 + 200 * static_cast<size_t>(p));
        periods.push_back(all.select_rows(idx));
    }

    for (Family family : {Family::knn, Family::gnbc, Family::bnbc, Family::lr, Family::lsvm,
                          Family::dt, Family::rf, Family::gbdt, Family::mlp, Family::ksvm}) {
        AlgoConfig config = preset(family);
        config.seed = 8;
        Model model = fit(config, baseline);
        DriftReport report = chronological_eval(model, baseline, periods);
        CAPTURE(family_name(family));
        REQUIRE(report.periods.size() == 4);
        std::printf("  %-5s baseline F %.4f -> period-4 F %.4f\n", family_name(family),
                    report.baseline.fscore_wa, report.periods[3].metrics.fscore_wa);
        REQUIRE(report.periods[3].metrics.fscore_wa < report.baseline.fscore_wa);

        bool finite_uptime = false;
        for (const ThresholdEconomics& e : report.economics) {
            finite_uptime = finite_uptime || e.uptime_seconds.has_value();
        }
        REQUIRE(finite_uptime);
    }
    report_pass("criterion 8: period-4 F-score below baseline for all ten families");
}

TEST_CASE("criterion 9: the boolean conversion matches the shipped table") {
    BucketTable file = BucketTable::load(PACKDET_DATA_DIR "/bucket_table_v1.tsv");
    BucketTable builtin = BucketTable::builtin();
    REQUIRE(file == builtin);
    REQUIRE(file.boolean_dim() == builtin.boolean_dim());

    // group structure drives the one-hot output layout
    FeatureVector v;
    std::vector<double> bits = builtin.booleanize(v);
    REQUIRE(static_cast<int>(bits.size()) == file.boolean_dim());
    size_t expected = 0;
    for (int id = 1; id <= FEATURE_COUNT; ++id) {
        expected += static_cast<size_t>(file.group_size(id));
    }
    REQUIRE(bits.size() == expected);

    REQUIRE(builtin.bucketize(16, 1024) == 1);
    REQUIRE(builtin.bucketize(16, 4096) == 2);
    REQUIRE(builtin.bucketize(16, 512) == 3);
    REQUIRE(builtin.bucketize(16, 1536) == 4);
    REQUIRE(builtin.bucketize(16, 777) == 0);
    REQUIRE_THROWS_AS(builtin.bucketize(17, 1.0), Error);
    try {
        builtin.bucketize(17, 1.0);
    } catch (const Error& e) {
        REQUIRE(e.code() == Errc::deleted_feature);
    }
    report_pass("criterion 9: one-hot layout, feature-16 mapping and deleted feature 17");
}

TEST_CASE("criterion 10: vote rules verified over exhaustive truth tables") {
    for (int voters : {5, 4}) {
        int threshold = voters == 5 ? 3 : 2;
        for (unsigned mask = 0; mask < (1u << voters); ++mask) {
            std::vector<DetectorVote> votes;
            for (int i = 0; i < voters; ++i) {
                votes.push_back({"d" + std::to_string(i), "digest",
                                 (mask >> i) & 1 ? Verdict::packed : Verdict::not_packed});
            }
            GroundTruth rule = majority_vote(votes, threshold);
            GroundTruth defaulted = majority_vote(votes); // default threshold
            int oracle = vote_count_oracle(mask, voters) >= threshold ? 1 : 0;
            REQUIRE(rule.label == oracle);
            REQUIRE(defaulted.label == oracle);
            REQUIRE(rule.votes_for == vote_count_oracle(mask, voters));
        }
    }
    report_pass("criterion 10: 3-of-5 and 2-of-4 rules match the counting oracle");
}

} // TEST_SUITE
