#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace packdet {

/// Dense row-major matrix of doubles.
struct Matrix {
    size_t rows = 0;
    size_t cols = 0;
    std::vector<double> data;

    Matrix() = default;
    Matrix(size_t r, size_t c, double fill = 0.0) : rows(r), cols(c), data(r * c, fill) {}

    double& at(size_t r, size_t c) { return data[r * cols + c]; }
    double at(size_t r, size_t c) const { return data[r * cols + c]; }

    std::span<const double> row(size_t r) const { return {data.data() + r * cols, cols}; }
    std::span<double> row(size_t r) { return {data.data() + r * cols, cols}; }

    void push_row(std::span<const double> v) {
        if (rows == 0 && cols == 0) cols = v.size();
        data.insert(data.end(), v.begin(), v.end());
        ++rows;
    }
};

/// Feature matrix with labels, timestamps and sample digests. Columns carry
/// the feature ids they were extracted from (1..119 for a full store, a
/// subset after feature selection). label -1 means unlabeled.
struct Dataset {
    Matrix x;
    std::vector<int> labels;
    std::vector<int64_t> timestamps;
    std::vector<std::string> digests;
    std::vector<int> feature_ids;

    size_t size() const { return x.rows; }
    size_t dim() const { return x.cols; }

    Dataset select_rows(std::span<const size_t> idx) const;
    /// Keeps the columns whose feature id is listed, in listed order.
    Dataset select_features(const std::vector<int>& ids) const;

    int64_t max_timestamp() const;
    int64_t min_timestamp() const;
};

} // namespace packdet
