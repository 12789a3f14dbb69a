#pragma once

#include "packdet/classifiers.hpp"
#include "packdet/corpus.hpp"
#include "packdet/dataset.hpp"
#include "packdet/rng.hpp"

#include <string>
#include <vector>

namespace testutil {

using namespace packdet;

/// Two well-separated Gaussian blobs; class 0 near +center, class 1 near
/// -center.
inline Dataset make_blobs(size_t n, size_t dims, double center, uint64_t seed) {
    Rng rng(seed);
    Dataset d;
    d.x = Matrix(n, dims);
    for (int i = 0; i < static_cast<int>(dims); ++i) d.feature_ids.push_back(i + 1);
    for (size_t r = 0; r < n; ++r) {
        int label = r % 2 == 0 ? 0 : 1;
        double mu = label == 0 ? center : -center;
        for (size_t c = 0; c < dims; ++c) d.x.at(r, c) = mu + rng.gaussian();
        d.labels.push_back(label);
        d.timestamps.push_back(static_cast<int64_t>(r));
        d.digests.push_back("blob" + std::to_string(r));
    }
    return d;
}

inline Dataset dataset_from_rows(const std::vector<std::vector<double>>& rows,
                                 const std::vector<int>& labels) {
    Dataset d;
    for (size_t c = 0; c < rows[0].size(); ++c) d.feature_ids.push_back(static_cast<int>(c) + 1);
    for (const auto& row : rows) d.x.push_row(row);
    d.labels = labels;
    d.timestamps.assign(rows.size(), 0);
    for (size_t r = 0; r < rows.size(); ++r) d.digests.push_back("row" + std::to_string(r));
    return d;
}

/// Extracts features for every sample of a scenario, labeling by the
/// generator's class hint.
inline Dataset extract_scenario(const corpus::Scenario& sc) {
    Dataset d;
    for (int i = 1; i <= FEATURE_COUNT; ++i) d.feature_ids.push_back(i);
    d.x = Matrix(0, FEATURE_COUNT);
    d.x.cols = FEATURE_COUNT;
    for (const corpus::CorpusSample& s : sc.samples) {
        corpus::SynthPe spe = corpus::synth_pe(s.profile, s.seed);
        pe::PeFile pf = pe::parse_pe(spe.bytes);
        FeatureVector v = extract_all(pf, s.profile.timestamp);
        d.x.push_row(v.values);
        d.labels.push_back(
            s.profile.class_hint == corpus::SynthProfile::ClassHint::packed ? 1 : 0);
        d.timestamps.push_back(v.timestamp);
        d.digests.push_back(v.sample_digest);
    }
    return d;
}

} // namespace testutil
