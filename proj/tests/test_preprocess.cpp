#include "packdet/error.hpp"
#include "packdet/preprocess.hpp"
#include "packdet/rng.hpp"

#include <doctest.h>

#include <Eigen/Dense>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numeric>

using namespace packdet;

TEST_SUITE("preprocess") {

TEST_CASE("bucketize reproduces the documented mappings") {
    BucketTable t = BucketTable::builtin();
    CHECK(t.bucketize(16, 1024) == 1);
    CHECK(t.bucketize(16, 4096) == 2);
    CHECK(t.bucketize(16, 512) == 3);
    CHECK(t.bucketize(16, 1536) == 4);
    CHECK(t.bucketize(16, 777) == 0);

    CHECK(t.bucketize(22, 9) == t.bucketize(22, 200)); // both land in >=9
    CHECK(t.bucketize(22, 3) == 4);

    CHECK(t.bucketize(43, -1) == 1);
    CHECK(t.bucketize(43, 6.5) == 0);

    CHECK(t.bucketize(14, 249999) == 0);
    CHECK(t.bucketize(14, 250000) == 1);

    CHECK(t.bucketize(37, 0.5) == 0);
    CHECK(t.bucketize(37, 1.0) == 1);
    CHECK(t.bucketize(37, 3.0) == 2);

    CHECK_THROWS_AS(t.bucketize(17, 0), Error);
    try {
        t.bucketize(17, 0);
    } catch (const Error& e) {
        CHECK(e.code() == Errc::deleted_feature);
    }
}

TEST_CASE("booleanize one-hot structure") {
    BucketTable t = BucketTable::builtin();
    FeatureVector v; // all zeros
    v.set(16, 1024);
    std::vector<double> bits = t.booleanize(v);
    REQUIRE(static_cast<int>(bits.size()) == t.boolean_dim());

    // locate the feature-16 group: ids 1..15 come first
    size_t off = 0;
    for (int id = 1; id <= 15; ++id) off += static_cast<size_t>(t.group_size(id));
    REQUIRE(t.group_size(16) == 5);
    std::vector<double> group(bits.begin() + static_cast<ptrdiff_t>(off),
                              bits.begin() + static_cast<ptrdiff_t>(off + 5));
    CHECK(group == std::vector<double>{0, 1, 0, 0, 0});

    // every expanded group of an all-zero vector has exactly its
    // bucketize(id, 0) bit set
    FeatureVector zero;
    std::vector<double> zbits = t.booleanize(zero);
    size_t pos = 0;
    for (int id = 1; id <= FEATURE_COUNT; ++id) {
        int size = t.group_size(id);
        if (size == 0) continue;
        if (t.spec(id).rule == BucketRule::already_boolean) {
            CHECK(zbits[pos] == 0.0);
            pos += 1;
            continue;
        }
        double sum = 0;
        for (int b = 0; b < size; ++b) sum += zbits[pos + static_cast<size_t>(b)];
        CHECK(sum == 1.0);
        CHECK(zbits[pos + static_cast<size_t>(t.bucketize(id, 0.0))] == 1.0);
        pos += static_cast<size_t>(size);
    }
    CHECK(pos == zbits.size());
}

TEST_CASE("boolean dimension is input-independent") {
    BucketTable t = BucketTable::builtin();
    int dim = t.boolean_dim();
    CHECK(dim == 261);
    Rng rng(5);
    for (int i = 0; i < 100; ++i) {
        FeatureVector v;
        for (int id = 1; id <= FEATURE_COUNT; ++id) {
            v.set(id, std::floor(rng.unit() * 5000.0) - 1.0);
        }
        CHECK(static_cast<int>(t.booleanize(v).size()) == dim);
    }
}

TEST_CASE("the shipped table file matches the built-in rules") {
    BucketTable file = BucketTable::load(PACKDET_DATA_DIR "/bucket_table_v1.tsv");
    CHECK(file.version() == 1);
    CHECK(file == BucketTable::builtin());
    CHECK(file.spec(17).rule == BucketRule::deleted);

    // writer/reader round-trip
    std::string tmp =
        (std::filesystem::temp_directory_path() / "packdet_bucket_roundtrip.tsv").string();
    BucketTable::builtin().save(tmp);
    CHECK(BucketTable::load(tmp) == BucketTable::builtin());
    std::remove(tmp.c_str());

    // a rule missing its parameter is rejected
    {
        std::ofstream out(tmp);
        out << "# bucket-table v1\n";
        for (int id = 1; id <= FEATURE_COUNT; ++id) {
            if (id == 17) out << "17\tdeleted\n";
            else if (id == 37) out << "37\tpivot\n"; // no pivot value
            else out << id << "\tboolean\n";
        }
    }
    CHECK_THROWS_AS(BucketTable::load(tmp), Error);
    std::remove(tmp.c_str());
}

TEST_CASE("minmax and zscore scalers") {
    Matrix m(3, 2);
    m.at(0, 0) = 0;
    m.at(1, 0) = 5;
    m.at(2, 0) = 10;
    m.at(0, 1) = 7;
    m.at(1, 1) = 7;
    m.at(2, 1) = 7;

    ScalerModel mm = fit_scaler(ScalerMode::minmax, m);
    Matrix scaled = apply_scaler(mm, m);
    CHECK(scaled.at(0, 0) == 0.0);
    CHECK(scaled.at(1, 0) == 0.5);
    CHECK(scaled.at(2, 0) == 1.0);
    for (size_t r = 0; r < 3; ++r) CHECK(scaled.at(r, 1) == 0.0); // constant column

    // out-of-range values are not clamped
    std::vector<double> out = apply_scaler(mm, std::vector<double>{20.0, 7.0});
    CHECK(out[0] == 2.0);

    ScalerModel zs = fit_scaler(ScalerMode::zscore, m);
    Matrix z = apply_scaler(zs, m);
    for (size_t c = 0; c < 2; ++c) {
        double mean = (z.at(0, c) + z.at(1, c) + z.at(2, c)) / 3.0;
        double var = 0;
        for (size_t r = 0; r < 3; ++r) var += (z.at(r, c) - mean) * (z.at(r, c) - mean);
        var /= 3.0;
        CHECK(std::abs(mean) <= 1e-9);
        if (c == 0) CHECK(std::abs(std::sqrt(var) - 1.0) <= 1e-9);
        if (c == 1) CHECK(var == 0.0); // zero-variance column maps to zero
    }

    CHECK_THROWS_AS(fit_scaler(ScalerMode::minmax, Matrix{}), Error);
}

TEST_CASE("pca recovers the dominant direction of a line") {
    Rng rng(11);
    Matrix m(200, 2);
    for (size_t r = 0; r < 200; ++r) {
        double t = rng.gaussian();
        m.at(r, 0) = t + 1e-3 * rng.gaussian();
        m.at(r, 1) = t + 1e-3 * rng.gaussian();
    }
    PcaModel p = pca_fit(m, 1);
    double inv_sqrt2 = 1.0 / std::sqrt(2.0);
    double dot = p.components.at(0, 0) * inv_sqrt2 + p.components.at(0, 1) * inv_sqrt2;
    CHECK(std::abs(std::abs(dot) - 1.0) <= 1e-4);
}

TEST_CASE("full-rank pca round-trips through the inverse projection") {
    Rng rng(12);
    Matrix m(40, 6);
    for (double& v : m.data) v = rng.gaussian();
    PcaModel p = pca_fit(m, 6);
    for (size_t r = 0; r < m.rows; ++r) {
        auto y = pca_transform(p, m.row(r));
        auto back = pca_inverse_transform(p, y);
        for (size_t c = 0; c < 6; ++c) {
            CHECK(back[c] == doctest::Approx(m.at(r, c)).epsilon(1e-6));
        }
    }
}

TEST_CASE("pca components are orthonormal and variance-ordered, matching Eigen") {
    Rng rng(13);
    for (int round = 0; round < 20; ++round) {
        size_t n = 30 + rng.below(30), d = 4 + rng.below(7);
        Matrix m(n, d);
        for (double& v : m.data) v = rng.gaussian() * (1.0 + rng.unit());
        size_t k = d;
        PcaModel p = pca_fit(m, k);

        for (size_t i = 0; i < k; ++i) {
            CHECK(p.explained_variance[i] >= (i + 1 < k ? p.explained_variance[i + 1] : 0.0));
            for (size_t j = 0; j < k; ++j) {
                double dot = 0;
                for (size_t c = 0; c < d; ++c) {
                    dot += p.components.at(i, c) * p.components.at(j, c);
                }
                CHECK(std::abs(dot - (i == j ? 1.0 : 0.0)) <= 1e-8);
            }
        }

        // independent oracle: Eigen's self-adjoint solver on the same covariance
        Eigen::MatrixXd x(n, d);
        for (size_t r = 0; r < n; ++r)
            for (size_t c = 0; c < d; ++c) x(static_cast<Eigen::Index>(r),
                                             static_cast<Eigen::Index>(c)) = m.at(r, c);
        Eigen::RowVectorXd mean = x.colwise().mean();
        Eigen::MatrixXd centered = x.rowwise() - mean;
        Eigen::MatrixXd cov =
            centered.transpose() * centered / static_cast<double>(n - 1);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
        REQUIRE(solver.info() == Eigen::Success);
        for (size_t i = 0; i < k; ++i) {
            double oracle = solver.eigenvalues()(static_cast<Eigen::Index>(d - 1 - i));
            CHECK(std::abs(p.explained_variance[i] - oracle) <= 1e-9);
            Eigen::VectorXd v = solver.eigenvectors().col(static_cast<Eigen::Index>(d - 1 - i));
            double dot = 0;
            for (size_t c = 0; c < d; ++c) dot += p.components.at(i, c) * v(static_cast<Eigen::Index>(c));
            CHECK(std::abs(std::abs(dot) - 1.0) <= 1e-9);
        }

        // total explained variance never exceeds total data variance
        double total = 0;
        for (Eigen::Index c = 0; c < cov.cols(); ++c) total += cov(c, c);
        double explained = std::accumulate(p.explained_variance.begin(),
                                           p.explained_variance.end(), 0.0);
        CHECK(explained <= total + 1e-6);
    }
}

TEST_CASE("pca rejects bad component counts") {
    Matrix m(5, 3, 1.0);
    CHECK_THROWS_AS(pca_fit(m, 0), Error);
    CHECK_THROWS_AS(pca_fit(m, 4), Error);
    try {
        pca_fit(m, 4);
    } catch (const Error& e) {
        CHECK(e.code() == Errc::bad_k);
    }
}

} // TEST_SUITE
