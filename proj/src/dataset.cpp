#include "packdet/dataset.hpp"

#include "packdet/error.hpp"

#include <algorithm>

namespace packdet {

Dataset Dataset::select_rows(std::span<const size_t> idx) const {
    Dataset out;
    out.feature_ids = feature_ids;
    out.x = Matrix(idx.size(), x.cols);
    out.labels.reserve(idx.size());
    out.timestamps.reserve(idx.size());
    out.digests.reserve(idx.size());
    for (size_t k = 0; k < idx.size(); ++k) {
        size_t i = idx[k];
        std::copy_n(x.row(i).begin(), x.cols, out.x.row(k).begin());
        out.labels.push_back(i < labels.size() ? labels[i] : -1);
        out.timestamps.push_back(i < timestamps.size() ? timestamps[i] : 0);
        out.digests.push_back(i < digests.size() ? digests[i] : "");
    }
    return out;
}

Dataset Dataset::select_features(const std::vector<int>& ids) const {
    std::vector<size_t> cols;
    cols.reserve(ids.size());
    for (int id : ids) {
        auto it = std::find(feature_ids.begin(), feature_ids.end(), id);
        if (it == feature_ids.end()) {
            raise(Errc::dimension_mismatch,
                  "feature id not present in dataset: " + std::to_string(id));
        }
        cols.push_back(static_cast<size_t>(it - feature_ids.begin()));
    }
    Dataset out;
    out.feature_ids = ids;
    out.labels = labels;
    out.timestamps = timestamps;
    out.digests = digests;
    out.x = Matrix(x.rows, cols.size());
    for (size_t r = 0; r < x.rows; ++r) {
        for (size_t c = 0; c < cols.size(); ++c) out.x.at(r, c) = x.at(r, cols[c]);
    }
    return out;
}

int64_t Dataset::max_timestamp() const {
    int64_t m = INT64_MIN;
    for (int64_t t : timestamps) m = std::max(m, t);
    return m;
}

int64_t Dataset::min_timestamp() const {
    int64_t m = INT64_MAX;
    for (int64_t t : timestamps) m = std::min(m, t);
    return m;
}

} // namespace packdet
