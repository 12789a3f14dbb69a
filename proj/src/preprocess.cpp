#include "packdet/preprocess.hpp"

#include "packdet/error.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

namespace packdet {

namespace {

BucketSpec boolean_spec() { return {BucketRule::already_boolean, {}}; }
BucketSpec deleted_spec() { return {BucketRule::deleted, {}}; }
BucketSpec values_spec(std::vector<double> v) { return {BucketRule::value_buckets, std::move(v)}; }
BucketSpec thresholds_spec(std::vector<double> v) {
    return {BucketRule::threshold_buckets, std::move(v)};
}
BucketSpec pivot_spec(double p) { return {BucketRule::pivot_compare, {p}}; }
BucketSpec sentinel_spec(double s) { return {BucketRule::sentinel_bucket, {s}}; }

std::vector<double> counts_up_to(int n) {
    std::vector<double> v(static_cast<size_t>(n) + 1);
    std::iota(v.begin(), v.end(), 0.0);
    return v;
}

} // namespace

BucketTable BucketTable::builtin() {
    BucketTable t;
    t.version_ = 1;
    t.specs_.assign(FEATURE_COUNT, boolean_spec());
    auto set = [&](int id, BucketSpec s) { t.specs_[static_cast<size_t>(id - 1)] = std::move(s); };

    // 1-8 already boolean
    set(9, values_spec({0}));
    set(10, values_spec({4194304}));
    set(11, values_spec({4096, 8192}));
    set(12, values_spec({4, 5}));
    set(13, values_spec({0}));
    set(14, thresholds_spec({250000}));
    set(15, thresholds_spec({50000}));
    set(16, values_spec({1024, 4096, 512, 1536}));
    set(17, deleted_spec()); // dropped for sparsity
    set(18, values_spec({0}));
    set(19, values_spec({1048576}));
    set(20, values_spec({4096, 16384, 8192, 65536}));
    set(21, values_spec({4096, 8192}));
    set(22, values_spec(counts_up_to(8)));
    set(23, values_spec(counts_up_to(3)));
    set(24, values_spec({0}));
    set(25, thresholds_spec({3}));
    set(26, values_spec(counts_up_to(4)));
    set(27, values_spec(counts_up_to(2)));
    set(28, values_spec(counts_up_to(2)));
    set(29, values_spec(counts_up_to(4)));
    set(30, values_spec(counts_up_to(2)));
    // 31-36 already boolean
    set(37, pivot_spec(1));
    set(38, values_spec(counts_up_to(2)));
    set(39, values_spec(counts_up_to(3)));
    set(40, pivot_spec(1));
    set(41, values_spec({0}));
    // 42 already boolean
    for (int id = 43; id <= 45; ++id) set(id, sentinel_spec(-1));
    for (int id = 46; id <= 117; ++id) set(id, values_spec({0}));
    // 118 already boolean
    set(119, values_spec({0}));
    return t;
}

const BucketSpec& BucketTable::spec(int feature_id) const {
    if (feature_id < 1 || feature_id > FEATURE_COUNT) {
        raise(Errc::bad_argument, "feature id out of range: " + std::to_string(feature_id));
    }
    return specs_[static_cast<size_t>(feature_id - 1)];
}

int BucketTable::group_size(int feature_id) const {
    const BucketSpec& s = spec(feature_id);
    switch (s.rule) {
        case BucketRule::already_boolean: return 1;
        case BucketRule::deleted: return 0;
        case BucketRule::value_buckets: return static_cast<int>(s.params.size()) + 1;
        case BucketRule::threshold_buckets: return static_cast<int>(s.params.size()) + 1;
        case BucketRule::pivot_compare: return 3;
        case BucketRule::sentinel_bucket: return 2;
    }
    return 0;
}

std::vector<int> BucketTable::group_sizes() const {
    std::vector<int> out(FEATURE_COUNT);
    for (int id = 1; id <= FEATURE_COUNT; ++id) out[id - 1] = group_size(id);
    return out;
}

int BucketTable::boolean_dim() const {
    int total = 0;
    for (int id = 1; id <= FEATURE_COUNT; ++id) total += group_size(id);
    return total;
}

int BucketTable::bucketize(int feature_id, double value) const {
    const BucketSpec& s = spec(feature_id);
    switch (s.rule) {
        case BucketRule::already_boolean:
            return value != 0.0 ? 1 : 0;
        case BucketRule::deleted:
            raise(Errc::deleted_feature, "feature " + std::to_string(feature_id) + " is deleted");
        case BucketRule::value_buckets:
            for (size_t i = 0; i < s.params.size(); ++i) {
                if (value == s.params[i]) return static_cast<int>(i) + 1;
            }
            return 0;
        case BucketRule::threshold_buckets: {
            int code = 0;
            for (double cut : s.params) {
                if (value >= cut) ++code;
            }
            return code;
        }
        case BucketRule::pivot_compare:
            if (value < s.params[0]) return 0;
            if (value == s.params[0]) return 1;
            return 2;
        case BucketRule::sentinel_bucket:
            return value == s.params[0] ? 1 : 0;
    }
    raise(Errc::bad_argument, "unreachable bucket rule");
}

std::vector<double> BucketTable::booleanize_row(std::span<const double> values,
                                                std::span<const int> feature_ids) const {
    if (values.size() != feature_ids.size()) {
        raise(Errc::dimension_mismatch, "values/feature_ids size mismatch");
    }
    std::vector<double> out;
    for (size_t i = 0; i < feature_ids.size(); ++i) {
        int id = feature_ids[i];
        const BucketSpec& s = spec(id);
        if (s.rule == BucketRule::deleted) continue;
        if (s.rule == BucketRule::already_boolean) {
            out.push_back(values[i] != 0.0 ? 1.0 : 0.0);
            continue;
        }
        int size = group_size(id);
        int code = bucketize(id, values[i]);
        for (int b = 0; b < size; ++b) out.push_back(b == code ? 1.0 : 0.0);
    }
    return out;
}

std::vector<double> BucketTable::booleanize(const FeatureVector& v) const {
    std::vector<int> ids(FEATURE_COUNT);
    std::iota(ids.begin(), ids.end(), 1);
    return booleanize_row(v.values, ids);
}

Matrix BucketTable::booleanize_matrix(const Matrix& m, std::span<const int> feature_ids) const {
    Matrix out;
    for (size_t r = 0; r < m.rows; ++r) {
        auto row = booleanize_row(m.row(r), feature_ids);
        out.push_row(row);
    }
    if (m.rows == 0) out.cols = 0;
    return out;
}

namespace {

const char* rule_name(BucketRule r) {
    switch (r) {
        case BucketRule::already_boolean: return "boolean";
        case BucketRule::deleted: return "deleted";
        case BucketRule::value_buckets: return "values";
        case BucketRule::threshold_buckets: return "thresholds";
        case BucketRule::pivot_compare: return "pivot";
        case BucketRule::sentinel_bucket: return "sentinel";
    }
    return "?";
}

} // namespace

BucketTable BucketTable::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) raise(Errc::bad_argument, "cannot open bucket table: " + path);
    std::string line;
    if (!std::getline(in, line) || line.rfind("# bucket-table v", 0) != 0) {
        raise(Errc::format_version_mismatch, "missing bucket-table version line: " + path);
    }
    int version = 0;
    {
        auto* begin = line.data() + 16;
        auto [p, ec] = std::from_chars(begin, line.data() + line.size(), version);
        if (ec != std::errc() || version != 1) {
            raise(Errc::format_version_mismatch, "unsupported bucket-table version: " + line);
        }
    }

    BucketTable t;
    t.version_ = version;
    t.specs_.assign(FEATURE_COUNT, BucketSpec{});
    std::vector<bool> seen(FEATURE_COUNT, false);
    size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line[0] == '#') continue;
        std::istringstream ls(line);
        std::string id_s, rule_s, params_s;
        std::getline(ls, id_s, '\t');
        std::getline(ls, rule_s, '\t');
        std::getline(ls, params_s, '\t');
        int id = 0;
        auto [p, ec] = std::from_chars(id_s.data(), id_s.data() + id_s.size(), id);
        if (ec != std::errc() || id < 1 || id > FEATURE_COUNT) {
            raise(Errc::corrupt_row, "bad feature id at line " + std::to_string(line_no));
        }
        if (seen[static_cast<size_t>(id - 1)]) {
            raise(Errc::corrupt_row, "duplicate feature id at line " + std::to_string(line_no));
        }
        seen[static_cast<size_t>(id - 1)] = true;

        BucketSpec spec;
        if (rule_s == "boolean") spec.rule = BucketRule::already_boolean;
        else if (rule_s == "deleted") spec.rule = BucketRule::deleted;
        else if (rule_s == "values") spec.rule = BucketRule::value_buckets;
        else if (rule_s == "thresholds") spec.rule = BucketRule::threshold_buckets;
        else if (rule_s == "pivot") spec.rule = BucketRule::pivot_compare;
        else if (rule_s == "sentinel") spec.rule = BucketRule::sentinel_bucket;
        else raise(Errc::corrupt_row, "unknown rule at line " + std::to_string(line_no));

        if (!params_s.empty()) {
            std::istringstream ps(params_s);
            std::string tok;
            while (std::getline(ps, tok, ',')) {
                try {
                    spec.params.push_back(std::stod(tok));
                } catch (...) {
                    raise(Errc::corrupt_row, "bad parameter at line " + std::to_string(line_no));
                }
            }
        }
        size_t nparams = spec.params.size();
        bool arity_ok = true;
        switch (spec.rule) {
            case BucketRule::already_boolean:
            case BucketRule::deleted: arity_ok = nparams == 0; break;
            case BucketRule::value_buckets:
            case BucketRule::threshold_buckets: arity_ok = nparams >= 1; break;
            case BucketRule::pivot_compare:
            case BucketRule::sentinel_bucket: arity_ok = nparams == 1; break;
        }
        if (!arity_ok) {
            raise(Errc::corrupt_row, "wrong parameter count at line " + std::to_string(line_no));
        }
        t.specs_[static_cast<size_t>(id - 1)] = std::move(spec);
    }
    for (int id = 1; id <= FEATURE_COUNT; ++id) {
        if (!seen[static_cast<size_t>(id - 1)]) {
            raise(Errc::corrupt_row, "missing feature id " + std::to_string(id));
        }
    }
    if (t.spec(17).rule != BucketRule::deleted) {
        raise(Errc::corrupt_row, "feature 17 must be deleted");
    }
    return t;
}

void BucketTable::save(const std::string& path) const {
    std::ofstream out(path);
    if (!out) raise(Errc::bad_argument, "cannot write bucket table: " + path);
    out << "# bucket-table v" << version_ << "\n";
    for (int id = 1; id <= FEATURE_COUNT; ++id) {
        const BucketSpec& s = spec(id);
        out << id << '\t' << rule_name(s.rule);
        if (!s.params.empty()) {
            out << '\t';
            for (size_t i = 0; i < s.params.size(); ++i) {
                if (i) out << ',';
                double v = s.params[i];
                if (v == static_cast<double>(static_cast<long long>(v))) {
                    out << static_cast<long long>(v);
                } else {
                    out << v;
                }
            }
        }
        out << '\n';
    }
}

ScalerModel fit_scaler(ScalerMode mode, const Matrix& m) {
    if (m.rows == 0 || m.cols == 0) raise(Errc::empty_matrix, "fit_scaler needs data");
    ScalerModel s;
    s.mode = mode;
    s.a.resize(m.cols);
    s.b.resize(m.cols);
    for (size_t c = 0; c < m.cols; ++c) {
        if (mode == ScalerMode::minmax) {
            double lo = m.at(0, c), hi = m.at(0, c);
            for (size_t r = 1; r < m.rows; ++r) {
                lo = std::min(lo, m.at(r, c));
                hi = std::max(hi, m.at(r, c));
            }
            s.a[c] = lo;
            s.b[c] = hi;
        } else {
            double mean = 0.0;
            for (size_t r = 0; r < m.rows; ++r) mean += m.at(r, c);
            mean /= static_cast<double>(m.rows);
            double var = 0.0;
            for (size_t r = 0; r < m.rows; ++r) {
                double d = m.at(r, c) - mean;
                var += d * d;
            }
            var /= static_cast<double>(m.rows);
            s.a[c] = mean;
            s.b[c] = std::sqrt(var);
        }
    }
    return s;
}

std::vector<double> apply_scaler(const ScalerModel& s, std::span<const double> x) {
    if (x.size() != s.dim()) raise(Errc::dimension_mismatch, "apply_scaler dimension mismatch");
    std::vector<double> out(x.size());
    for (size_t c = 0; c < x.size(); ++c) {
        if (s.mode == ScalerMode::minmax) {
            double range = s.b[c] - s.a[c];
            out[c] = range > 0 ? (x[c] - s.a[c]) / range : 0.0;
        } else {
            out[c] = s.b[c] > 0 ? (x[c] - s.a[c]) / s.b[c] : 0.0;
        }
    }
    return out;
}

Matrix apply_scaler(const ScalerModel& s, const Matrix& m) {
    Matrix out(m.rows, m.cols);
    for (size_t r = 0; r < m.rows; ++r) {
        auto row = apply_scaler(s, m.row(r));
        std::copy(row.begin(), row.end(), out.row(r).begin());
    }
    return out;
}

void symmetric_eigen(const Matrix& sym, std::vector<double>& eigenvalues, Matrix& eigenvectors) {
    const size_t n = sym.rows;
    if (n != sym.cols) raise(Errc::bad_argument, "symmetric_eigen needs a square matrix");
    Matrix a = sym;
    Matrix v(n, n);
    for (size_t i = 0; i < n; ++i) v.at(i, i) = 1.0;

    // cyclic Jacobi sweeps
    for (int sweep = 0; sweep < 100; ++sweep) {
        double off = 0.0;
        for (size_t p = 0; p < n; ++p)
            for (size_t q = p + 1; q < n; ++q) off += a.at(p, q) * a.at(p, q);
        if (off < 1e-24 * static_cast<double>(n * n)) break;
        for (size_t p = 0; p < n; ++p) {
            for (size_t q = p + 1; q < n; ++q) {
                double apq = a.at(p, q);
                if (std::abs(apq) < 1e-300) continue;
                double theta = (a.at(q, q) - a.at(p, p)) / (2.0 * apq);
                double t = (theta >= 0 ? 1.0 : -1.0) /
                           (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                double c = 1.0 / std::sqrt(t * t + 1.0);
                double s = t * c;
                for (size_t k = 0; k < n; ++k) {
                    double akp = a.at(k, p), akq = a.at(k, q);
                    a.at(k, p) = c * akp - s * akq;
                    a.at(k, q) = s * akp + c * akq;
                }
                for (size_t k = 0; k < n; ++k) {
                    double apk = a.at(p, k), aqk = a.at(q, k);
                    a.at(p, k) = c * apk - s * aqk;
                    a.at(q, k) = s * apk + c * aqk;
                }
                for (size_t k = 0; k < n; ++k) {
                    double vkp = v.at(k, p), vkq = v.at(k, q);
                    v.at(k, p) = c * vkp - s * vkq;
                    v.at(k, q) = s * vkp + c * vkq;
                }
            }
        }
    }

    std::vector<size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](size_t i, size_t j) { return a.at(i, i) > a.at(j, j); });
    eigenvalues.resize(n);
    eigenvectors = Matrix(n, n);
    for (size_t i = 0; i < n; ++i) {
        eigenvalues[i] = a.at(order[i], order[i]);
        for (size_t k = 0; k < n; ++k) eigenvectors.at(i, k) = v.at(k, order[i]);
    }
}

PcaModel pca_fit(const Matrix& m, size_t k) {
    if (k < 1 || k > std::min(m.rows, m.cols)) {
        raise(Errc::bad_k, "pca_fit: k must be in [1, min(rows, cols)]");
    }
    const size_t n = m.rows, d = m.cols;
    PcaModel model;
    model.mean.assign(d, 0.0);
    for (size_t r = 0; r < n; ++r)
        for (size_t c = 0; c < d; ++c) model.mean[c] += m.at(r, c);
    for (double& v : model.mean) v /= static_cast<double>(n);

    Matrix cov(d, d);
    const double denom = n > 1 ? static_cast<double>(n - 1) : 1.0;
    for (size_t r = 0; r < n; ++r) {
        for (size_t i = 0; i < d; ++i) {
            double di = m.at(r, i) - model.mean[i];
            for (size_t j = i; j < d; ++j) {
                cov.at(i, j) += di * (m.at(r, j) - model.mean[j]);
            }
        }
    }
    for (size_t i = 0; i < d; ++i) {
        for (size_t j = i; j < d; ++j) {
            cov.at(i, j) /= denom;
            cov.at(j, i) = cov.at(i, j);
        }
    }

    std::vector<double> evals;
    Matrix evecs;
    symmetric_eigen(cov, evals, evecs);
    model.components = Matrix(k, d);
    model.explained_variance.resize(k);
    for (size_t i = 0; i < k; ++i) {
        model.explained_variance[i] = std::max(evals[i], 0.0);
        std::copy_n(evecs.row(i).begin(), d, model.components.row(i).begin());
    }
    return model;
}

std::vector<double> pca_transform(const PcaModel& p, std::span<const double> x) {
    const size_t d = p.mean.size();
    if (x.size() != d) raise(Errc::dimension_mismatch, "pca_transform dimension mismatch");
    std::vector<double> out(p.components.rows, 0.0);
    for (size_t i = 0; i < p.components.rows; ++i) {
        double s = 0.0;
        for (size_t c = 0; c < d; ++c) s += p.components.at(i, c) * (x[c] - p.mean[c]);
        out[i] = s;
    }
    return out;
}

Matrix pca_transform(const PcaModel& p, const Matrix& m) {
    Matrix out(m.rows, p.components.rows);
    for (size_t r = 0; r < m.rows; ++r) {
        auto row = pca_transform(p, m.row(r));
        std::copy(row.begin(), row.end(), out.row(r).begin());
    }
    return out;
}

std::vector<double> pca_inverse_transform(const PcaModel& p, std::span<const double> y) {
    if (y.size() != p.components.rows) {
        raise(Errc::dimension_mismatch, "pca_inverse_transform dimension mismatch");
    }
    const size_t d = p.mean.size();
    std::vector<double> out(p.mean.begin(), p.mean.end());
    for (size_t i = 0; i < y.size(); ++i) {
        for (size_t c = 0; c < d; ++c) out[c] += p.components.at(i, c) * y[i];
    }
    return out;
}

} // namespace packdet
