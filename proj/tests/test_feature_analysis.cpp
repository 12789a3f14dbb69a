#include "packdet/error.hpp"
#include "packdet/feature_analysis.hpp"
#include "packdet/rng.hpp"

#include "test_util.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>

using namespace packdet;
using testutil::dataset_from_rows;
using testutil::make_blobs;

namespace {

Model linear_model(std::vector<double> w) {
    Model m;
    m.family = Family::lr;
    m.raw_dim = w.size();
    for (size_t i = 0; i < w.size(); ++i) m.feature_ids.push_back(static_cast<int>(i) + 1);
    m.state = LinearState{std::move(w), 0.0};
    return m;
}

// planted signal: the label is carried by the first three (correlated)
// features, so the leading principal component survives standardization
Dataset planted_signal(size_t n, size_t dims, uint64_t seed) {
    Rng rng(seed);
    std::vector<std::vector<double>> rows;
    std::vector<int> labels;
    for (size_t r = 0; r < n; ++r) {
        int label = static_cast<int>(rng.below(2));
        double direction = label == 1 ? 2.0 + rng.unit() : -2.0 - rng.unit();
        std::vector<double> row(dims);
        for (size_t c = 0; c < 3 && c < dims; ++c) {
            row[c] = direction + 0.1 * rng.gaussian();
        }
        for (size_t c = 3; c < dims; ++c) row[c] = rng.gaussian() * 0.3;
        rows.push_back(std::move(row));
        labels.push_back(label);
    }
    return dataset_from_rows(rows, labels);
}

} // namespace

TEST_SUITE("feature_analysis") {

TEST_CASE("coefficient magnitudes rank linear models") {
    ImportanceRanking r = importance(linear_model({3.0, -4.0, 0.0}));
    CHECK(r.score == std::vector<double>{3.0, 4.0, 0.0});
    CHECK(r.rank == std::vector<int>{2, 1, 3});
}

TEST_CASE("a single-split tree concentrates all importance") {
    Model m;
    m.family = Family::dt;
    m.raw_dim = 6;
    for (int i = 1; i <= 6; ++i) m.feature_ids.push_back(i);
    Tree tree;
    tree.nodes.push_back({4, 0.5, 1, 2, 0.0, 10, 1.0}); // splits feature id 5
    tree.nodes.push_back({-1, 0.0, -1, -1, 0.0, 5, 0.0});
    tree.nodes.push_back({-1, 0.0, -1, -1, 1.0, 5, 0.0});
    m.state = TreeState{tree};

    ImportanceRanking r = importance(m);
    CHECK(r.score[4] == 1.0);
    for (size_t i = 0; i < 6; ++i) {
        if (i != 4) CHECK(r.score[i] == 0.0);
    }
    CHECK(r.rank[4] == 1);
}

TEST_CASE("forest importance equals the recomputation from its trees") {
    Dataset data = make_blobs(80, 5, 1.0, 30);
    AlgoConfig config = preset(Family::rf);
    config.seed = 3;
    Model m = fit(config, data);
    ImportanceRanking r = importance(m);

    // direct recomputation from the stored trees
    const ForestState& forest = std::get<ForestState>(m.state);
    std::vector<double> expect(5, 0.0);
    for (const Tree& tree : forest.trees) {
        double n_root = static_cast<double>(tree.nodes[0].n_samples);
        for (const TreeNode& node : tree.nodes) {
            if (node.feature < 0) continue;
            const TreeNode& l = tree.nodes[static_cast<size_t>(node.left)];
            const TreeNode& rr = tree.nodes[static_cast<size_t>(node.right)];
            double n = static_cast<double>(node.n_samples);
            double child = (static_cast<double>(l.n_samples) * l.impurity +
                            static_cast<double>(rr.n_samples) * rr.impurity) /
                           n;
            expect[static_cast<size_t>(node.feature)] +=
                (n / n_root) * (node.impurity - child);
        }
    }
    for (double& v : expect) v /= static_cast<double>(forest.trees.size());
    double total = 0;
    for (double v : expect) total += v;
    for (double& v : expect) v /= total;

    double sum = 0;
    for (size_t i = 0; i < 5; ++i) {
        CHECK(r.score[i] == doctest::Approx(expect[i]).epsilon(1e-9));
        sum += r.score[i];
    }
    CHECK(std::abs(sum - 1.0) <= 1e-9);
}

TEST_CASE("importance is refused where no coefficients exist") {
    Dataset data = make_blobs(30, 3, 2.0, 31);
    AlgoConfig knn = preset(Family::knn);
    knn.preprocessing = Preprocessing::none;
    Model m = fit(knn, data);
    CHECK_THROWS_AS(importance(m), Error);
    try {
        importance(m);
    } catch (const Error& e) {
        CHECK(e.code() == Errc::unsupported_family);
    }
}

TEST_CASE("importance is row-order invariant for seeded fits") {
    Dataset data = planted_signal(60, 6, 32);
    std::vector<size_t> perm(data.size());
    for (size_t i = 0; i < perm.size(); ++i) perm[i] = perm.size() - 1 - i;
    Dataset reversed = data.select_rows(perm);
    AlgoConfig config = preset(Family::dt);
    Model a = fit(config, data);
    Model b = fit(config, reversed);
    ImportanceRanking ra = importance(a);
    ImportanceRanking rb = importance(b);
    for (size_t i = 0; i < ra.score.size(); ++i) {
        CHECK(ra.score[i] == doctest::Approx(rb.score[i]).epsilon(1e-12));
    }
}

TEST_CASE("time_accuracy_ratio reproduces the printed selection cells") {
    // threshold-selection cells
    CHECK(std::abs(time_accuracy_ratio(0.8572, 0.8556, 0.1797, 0.0218).value - 470.0) /
              470.0 <=
          0.02);
    CHECK(std::abs(time_accuracy_ratio(0.8657, 0.8656, 9.6522, 2.6470).value - 6283.0) /
              6283.0 <=
          0.02);
    CHECK(std::abs(time_accuracy_ratio(0.8627, 0.8622, 0.6423, 0.2843).value - 961.68) /
              961.68 <=
          0.02);
    TimeAccuracyRatio lr = time_accuracy_ratio(0.8476, 0.8480, 4.385, 3.462);
    CHECK(lr.improved);
    CHECK(std::abs(lr.magnitude() - 446.0) / 446.0 <= 0.02);
    TimeAccuracyRatio lsvm = time_accuracy_ratio(0.8440, 0.8470, 281.243, 128.804);
    CHECK(lsvm.improved);
    CHECK(std::abs(lsvm.magnitude() - 152.0) / 152.0 <= 0.02);

    // component-sweep cells
    auto near = [](TimeAccuracyRatio r, double want, double tol) {
        return std::abs(r.magnitude() - want) / want <= tol;
    };
    CHECK(near(time_accuracy_ratio(0.8391, 0.8411, 11.97, 0.634462), 397.0, 0.02));
    CHECK(near(time_accuracy_ratio(0.2458, 0.8086, 0.145, 0.0201), 0.37, 0.02));
    CHECK(near(time_accuracy_ratio(0.8476, 0.8513, 4.648, 3.808), 41.0, 0.02));
    CHECK(near(time_accuracy_ratio(0.844, 0.8458, 188.713, 153.405), 87.72, 0.02));
    CHECK(near(time_accuracy_ratio(0.8572, 0.8464, 0.195, 0.0829), 46.0, 0.02));
    CHECK(near(time_accuracy_ratio(0.8657, 0.8622, 10.15, 5.13846), 122.33, 0.02));
    CHECK(near(time_accuracy_ratio(0.8592, 0.8628, 90.392, 85.882), 12.0, 0.02));

    TimeAccuracyRatio same = time_accuracy_ratio(0.9, 0.9, 1.0, 1.0);
    CHECK(same.unchanged);
    CHECK(same.value == 0.0);

    CHECK_THROWS_AS(time_accuracy_ratio(0.0, 0.5, 1.0, 1.0), Error);
    CHECK_THROWS_AS(time_accuracy_ratio(0.5, 0.5, 0.0, 1.0), Error);
}

TEST_CASE("threshold selection keeps the full set at threshold zero") {
    Dataset data = planted_signal(80, 8, 33);
    AlgoConfig config = preset(Family::gbdt);
    config.n_estimators = 5;
    config.seed = 9;
    Model m = fit(config, data);

    std::vector<std::string> notes;
    auto reports = select_by_threshold(m, data, {0.0}, 0.05, 4, 9, &notes);
    REQUIRE(reports.size() == 1);
    CHECK(reports[0].retained.size() == 8);
    CHECK(reports[0].new_accuracy == reports[0].old_accuracy);
    CHECK(notes.empty());

    // a threshold above every score is skipped with a note
    notes.clear();
    auto skipped = select_by_threshold(m, data, {2.0}, 0.05, 4, 9, &notes);
    CHECK(skipped.empty());
    REQUIRE(notes.size() == 1);
    CHECK(notes[0].find("EmptySelection") != std::string::npos);
}

TEST_CASE("retained sets shrink as the threshold grows") {
    Dataset data = planted_signal(80, 8, 34);
    AlgoConfig config = preset(Family::dt);
    config.seed = 4;
    Model m = fit(config, data);
    ImportanceRanking r = importance(m);

    size_t prev = 9;
    for (double threshold : {0.0, 0.01, 0.1, 0.5}) {
        size_t kept = 0;
        for (double s : r.score) kept += s >= threshold;
        CHECK(kept <= prev);
        prev = kept;
    }

    // reports never violate the accuracy-drop contract
    auto reports = select_by_threshold(m, data, {0.0, 0.01, 0.1}, 0.05, 4, 4);
    for (const SelectionReport& rep : reports) {
        CHECK((rep.old_accuracy - rep.new_accuracy) / rep.old_accuracy <= 0.05 + 1e-12);
    }
}

TEST_CASE("iterative selection converges onto the planted signal") {
    Dataset data = planted_signal(100, 10, 35);
    AlgoConfig config = preset(Family::dt);
    config.seed = 5;

    // a schedule as wide as the feature set is stable after one pass
    SelectionReport full = iterative_selection(config, data, {10}, 4, 5);
    CHECK(full.retained.size() == 10);

    SelectionReport narrowed = iterative_selection(config, data, {8, 5, 2}, 4, 5);
    CHECK(narrowed.retained.size() <= 2);
    bool kept_signal = false;
    for (int id : narrowed.retained) kept_signal = kept_signal || id <= 3;
    CHECK(kept_signal);
    CHECK(narrowed.method == "iterative");

    // rerunning on the reported subset returns the same subset
    Dataset reduced = data.select_features(narrowed.retained);
    SelectionReport again = iterative_selection(config, reduced, {8, 5, 2}, 4, 5);
    CHECK(again.retained == narrowed.retained);
}

TEST_CASE("pca sweep evaluates every component count") {
    Dataset data = planted_signal(80, 6, 36);
    AlgoConfig knn = preset(Family::knn);
    knn.preprocessing = Preprocessing::zscore;
    knn.k_neighbors = 3;
    knn.seed = 6;

    PcaSweepReport report = pca_sweep(knn, data, {1, 2, 6}, 4, 6);
    REQUIRE(report.rows.size() == 3);
    CHECK(report.rows[0].k == 1);
    CHECK(report.rows[2].k == 6);

    // the signal lives in one direction, so one component suffices
    CHECK(report.rows[0].accuracy >= 0.9);

    // a full-rank rotation preserves neighbor structure
    CvOutcome baseline = cross_validate(knn, data, 4, 6);
    CHECK(std::abs(report.rows[2].accuracy - baseline.mean_accuracy) <= 0.05);

    CHECK_THROWS_AS(pca_sweep(preset(Family::bnbc), data, {2}, 4, 6), Error);
    CHECK_THROWS_AS(pca_sweep(knn, data, {0}, 4, 6), Error);
    CHECK_THROWS_AS(pca_sweep(knn, data, {7}, 4, 6), Error);
    try {
        pca_sweep(knn, data, {7}, 4, 6);
    } catch (const Error& e) {
        CHECK(e.code() == Errc::bad_k);
    }
}

} // TEST_SUITE
