#include "packdet/drift.hpp"
#include "packdet/error.hpp"
#include "packdet/metrics.hpp"
#include "packdet/rng.hpp"

#include "test_util.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

using namespace packdet;

namespace {

// independent least-squares oracle: explicit normal equations solved with
// Cramer's rule
std::array<double, 3> cramer_quadratic(std::span<const std::pair<double, double>> pts) {
    double s[5] = {}, r[3] = {};
    for (auto& [t, f] : pts) {
        double t2 = t * t;
        s[0] += 1;
        s[1] += t;
        s[2] += t2;
        s[3] += t2 * t;
        s[4] += t2 * t2;
        r[0] += f * t2;
        r[1] += f * t;
        r[2] += f;
    }
    // rows for unknowns (a, b, c)
    double m[3][3] = {{s[4], s[3], s[2]}, {s[3], s[2], s[1]}, {s[2], s[1], s[0]}};
    auto det3 = [](double a[3][3]) {
        return a[0][0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1]) -
               a[0][1] * (a[1][0] * a[2][2] - a[1][2] * a[2][0]) +
               a[0][2] * (a[1][0] * a[2][1] - a[1][1] * a[2][0]);
    };
    double d = det3(m);
    std::array<double, 3> out{};
    for (int col = 0; col < 3; ++col) {
        double tmp[3][3];
        std::copy(&m[0][0], &m[0][0] + 9, &tmp[0][0]);
        for (int row = 0; row < 3; ++row) tmp[row][col] = r[row];
        out[static_cast<size_t>(col)] = det3(tmp) / d;
    }
    return out;
}

double residual_sum(std::span<const std::pair<double, double>> pts,
                    const std::array<double, 3>& c) {
    double s = 0;
    for (auto& [t, f] : pts) {
        double e = c[0] * t * t + c[1] * t + c[2] - f;
        s += e * e;
    }
    return s;
}

} // namespace

TEST_SUITE("metrics") {

TEST_CASE("kfold splits are seeded partitions") {
    auto folds = kfold_indices(10, 10, 1);
    REQUIRE(folds.size() == 10);
    for (const auto& f : folds) CHECK(f.size() == 1);

    Rng rng(2);
    for (int round = 0; round < 100; ++round) {
        size_t n = 1 + rng.below(200);
        size_t k = 1 + rng.below(n);
        auto fs = kfold_indices(n, k, round);
        std::set<size_t> seen;
        size_t lo = n, hi = 0;
        for (const auto& f : fs) {
            lo = std::min(lo, f.size());
            hi = std::max(hi, f.size());
            for (size_t i : f) CHECK(seen.insert(i).second); // pairwise disjoint
        }
        CHECK(seen.size() == n); // union covers everything
        CHECK(hi - lo <= 1);
    }

    CHECK(kfold_indices(50, 7, 99) == kfold_indices(50, 7, 99));
    CHECK_THROWS_AS(kfold_indices(5, 6, 0), Error);
}

TEST_CASE("compute_metrics basics") {
    std::vector<int> labels = {1, 1, 1, 0, 0, 0};
    std::vector<int> perfect = labels;
    MetricsReport all = compute_metrics(perfect, labels);
    CHECK(all.accuracy == 1.0);
    CHECK(all.precision_p == 1.0);
    CHECK(all.recall_np == 1.0);
    CHECK(all.fscore_wa == 1.0);

    std::vector<int> preds = {1, 1, 0, 0, 0, 1};
    MetricsReport m = compute_metrics(preds, labels);
    CHECK(m.tp == 2);
    CHECK(m.fn == 1);
    CHECK(m.fp == 1);
    CHECK(m.tn == 2);
    CHECK(m.accuracy == doctest::Approx(4.0 / 6.0).epsilon(1e-12));

    CHECK_THROWS_AS(compute_metrics(std::vector<int>{1}, std::vector<int>{1, 0}), Error);
    CHECK_THROWS_AS(compute_metrics(std::vector<int>{}, std::vector<int>{}), Error);
}

TEST_CASE("fscore identities") {
    // printed precision/recall pair reproduces the printed F-score
    CHECK(std::abs(fscore(0.9844, 0.9676) - 0.9759) <= 5e-4);
    for (double p : {0.25, 0.5, 0.9}) {
        CHECK(fscore(p, p) == doctest::Approx(p).epsilon(1e-12));
    }
    CHECK(fscore(0.0, 0.0) == 0.0);
}

TEST_CASE("undefined ratios are flagged, not poisoned") {
    std::vector<int> labels = {1, 1, 1};
    std::vector<int> preds = {0, 0, 0}; // nothing predicted packed, nothing actually clean
    MetricsReport m = compute_metrics(preds, labels);
    CHECK_FALSE(m.precision_p_defined);
    CHECK(m.precision_p == 0.0);
    CHECK(m.recall_p == 0.0);
    CHECK_FALSE(m.fscore_p_defined);
    CHECK(m.accuracy == 0.0);
}

TEST_CASE("accuracy and weighted-average identities") {
    Rng rng(3);
    for (int round = 0; round < 50; ++round) {
        size_t n = 2 + rng.below(100);
        std::vector<int> labels(n), preds(n);
        for (size_t i = 0; i < n; ++i) {
            labels[i] = rng.unit() < 0.4 ? 1 : 0;
            preds[i] = rng.unit() < 0.5 ? labels[i] : static_cast<int>(rng.below(2));
        }
        MetricsReport m = compute_metrics(preds, labels);
        double n_p = static_cast<double>(m.tp + m.fn);
        double n_np = static_cast<double>(m.tn + m.fp);
        CHECK(std::abs(m.accuracy -
                       (m.recall_p * n_p + m.recall_np * n_np) / static_cast<double>(n)) <=
              1e-15);
        CHECK(m.fscore_wa >= std::min(m.fscore_p, m.fscore_np) - 1e-15);
        CHECK(m.fscore_wa <= std::max(m.fscore_p, m.fscore_np) + 1e-15);
        CHECK(m.accuracy ==
              static_cast<double>(m.tp + m.tn) / static_cast<double>(m.total()));
    }
}

TEST_CASE("fit_decay interpolates exact quadratics") {
    std::vector<std::pair<double, double>> linear;
    for (double t : {0.0, 1.0e6, 2.5e6, 4.0e6}) linear.push_back({t, 1.0 - 1e-8 * t});
    auto c = fit_decay(linear);
    CHECK(std::abs(c[0]) <= 1e-12);
    CHECK(std::abs(c[1] - (-1e-8)) <= 1e-12);
    CHECK(std::abs(c[2] - 1.0) <= 1e-12);

    std::vector<std::pair<double, double>> three = {{0, 2}, {1, 3}, {2, 6}};
    auto q = fit_decay(three); // t^2 + 2 passes through all three
    CHECK(residual_sum(three, q) <= 1e-18);
    CHECK(std::abs(q[0] - 1.0) <= 1e-9);
    CHECK(std::abs(q[1]) <= 1e-9);
    CHECK(std::abs(q[2] - 2.0) <= 1e-9);

    CHECK_THROWS_AS(fit_decay(std::vector<std::pair<double, double>>{{0, 1}, {1, 2}}), Error);
}

TEST_CASE("fit_decay matches the normal-equations oracle on noisy data") {
    Rng rng(4);
    for (int round = 0; round < 10; ++round) {
        std::vector<std::pair<double, double>> pts;
        for (int i = 0; i < 20; ++i) {
            double t = static_cast<double>(i) * 0.7;
            double f = 0.9 - 0.01 * t + 0.0004 * t * t + 0.01 * rng.gaussian();
            pts.push_back({t, f});
        }
        auto mine = fit_decay(pts);
        auto oracle = cramer_quadratic(pts);
        for (int i = 0; i < 3; ++i) {
            CHECK(std::abs(mine[static_cast<size_t>(i)] - oracle[static_cast<size_t>(i)]) <=
                  1e-9);
        }
        // the residual is a local (hence global) minimum
        double base = residual_sum(pts, mine);
        for (int i = 0; i < 3; ++i) {
            for (double d : {-1e-6, 1e-6}) {
                auto perturbed = mine;
                perturbed[static_cast<size_t>(i)] += d;
                CHECK(residual_sum(pts, perturbed) >= base - 1e-15);
            }
        }
    }
}

TEST_CASE("uptime picks the first crossing") {
    // linear decay
    auto t = uptime({0.0, -1e-7, 1.0}, 0.95, 1e9);
    REQUIRE(t.has_value());
    CHECK(*t == doctest::Approx(5.0e5).epsilon(1e-12));

    // already below at t = 0
    CHECK(uptime({0.0, -1e-7, 0.9}, 0.95, 1e9) == 0.0);

    // flat above threshold: never reached
    CHECK_FALSE(uptime({0.0, 0.0, 0.99}, 0.95, 1e9).has_value());
    // rising curve: never reached
    CHECK_FALSE(uptime({1e-12, 1e-7, 0.96}, 0.95, 1e9).has_value());
    // beyond the horizon counts as not reached
    CHECK_FALSE(uptime({0.0, -1e-7, 1.0}, 0.95, 1e5).has_value());

    // downward parabola crosses at the larger root
    auto down = uptime({-1e-12, 0.0, 1.0}, 0.96, 1e9);
    REQUIRE(down.has_value());
    CHECK(*down == doctest::Approx(2.0e5).epsilon(1e-9));
}

TEST_CASE("economics ratio reproduces the printed cell") {
    double ratio = economics_ratio(8986447, 2.1259);
    CHECK(std::abs(ratio - 4227126) / 4227126 <= 1e-3);

    CHECK(economics_ratio(0, 5.0) == 0.0);
    CHECK_THROWS_AS(economics_ratio(100, 0.0), Error);
    try {
        economics_ratio(100, 0.0);
    } catch (const Error& e) {
        CHECK(e.code() == Errc::zero_train_time);
    }
}

} // TEST_SUITE

TEST_SUITE("drift") {

namespace {

Dataset shift_timestamps(const Dataset& d, int64_t offset) {
    Dataset out = d;
    for (int64_t& t : out.timestamps) t += offset;
    return out;
}

} // namespace

TEST_CASE("a replayed baseline period scores exactly the baseline metrics") {
    Dataset baseline = testutil::make_blobs(60, 3, 2.0, 41);
    Model m = fit(preset(Family::dt), baseline);
    std::vector<Dataset> periods = {shift_timestamps(baseline, 100000)};
    DriftReport report = chronological_eval(m, baseline, periods);
    REQUIRE(report.periods.size() == 1);
    CHECK(report.periods[0].metrics.accuracy == report.baseline.accuracy);
    CHECK(report.periods[0].metrics.fscore_wa == report.baseline.fscore_wa);
    CHECK(report.periods[0].metrics.tp == report.baseline.tp);
}

TEST_CASE("stationary periods stay within noise of the baseline") {
    corpus::Scenario sc = corpus::scenario_default(240, 42);
    Dataset all = testutil::extract_scenario(sc);
    std::vector<size_t> first, second;
    for (size_t i = 0; i < all.size(); ++i) (i % 2 == 0 ? first : second).push_back(i);
    Dataset baseline = all.select_rows(first);
    Dataset later = shift_timestamps(all.select_rows(second), 400000000);

    AlgoConfig config = preset(Family::rf);
    config.seed = 42;
    Model m = fit(config, baseline);
    DriftReport report = chronological_eval(m, baseline, {later});
    CHECK(std::abs(report.periods[0].metrics.accuracy - report.baseline.accuracy) <= 0.05);
}

TEST_CASE("a planted shift produces a declining F-score and a usable fit") {
    corpus::Scenario sc = corpus::scenario_drift(300, 100, 43);
    Dataset all = testutil::extract_scenario(sc);
    std::vector<size_t> base_idx(300);
    std::iota(base_idx.begin(), base_idx.end(), 0);
    Dataset baseline = all.select_rows(base_idx);
    std::vector<Dataset> periods;
    for (int p = 0; p < 4; ++p) {
        std::vector<size_t> idx(100);
        std::iota(idx.begin(), idx.end(), 300 + 100 * static_cast<size_t>(p));
        periods.push_back(all.select_rows(idx));
    }

    AlgoConfig config = preset(Family::gbdt);
    config.seed = 43;
    Model m = fit(config, baseline);
    DriftReport report = chronological_eval(m, baseline, periods);
    REQUIRE(report.periods.size() == 4);
    CHECK(report.periods[3].metrics.fscore_wa < report.baseline.fscore_wa);
    CHECK(report.periods[3].metrics.fscore_wa < report.periods[0].metrics.fscore_wa);
    for (size_t i = 1; i < 4; ++i) {
        CHECK(report.periods[i].t_mid_seconds > report.periods[i - 1].t_mid_seconds);
    }
    bool finite = false;
    for (const ThresholdEconomics& e : report.economics) {
        finite = finite || e.uptime_seconds.has_value();
        if (e.uptime_seconds && e.ratio) {
            CHECK(*e.ratio ==
                  doctest::Approx(*e.uptime_seconds / report.train_seconds).epsilon(1e-12));
        }
    }
    CHECK(finite);
}

TEST_CASE("periods that predate the training data are rejected") {
    Dataset baseline = testutil::make_blobs(40, 3, 2.0, 44);
    Model m = fit(preset(Family::dt), baseline);
    std::vector<Dataset> periods = {baseline}; // same timestamps: not strictly later
    CHECK_THROWS_AS(chronological_eval(m, baseline, periods), Error);
    try {
        chronological_eval(m, baseline, periods);
    } catch (const Error& e) {
        CHECK(e.code() == Errc::time_order);
    }
}

} // TEST_SUITE
