#pragma once

#include "packdet/pe_parser.hpp"

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace packdet {

inline constexpr int FEATURE_COUNT = 119;

enum class FeatureStatus : uint8_t { ok, defaulted };

/// The 119 static features of one sample, indexed by feature id 1..119.
/// Booleans are 0/1, entropies lie in [0,8] with -1 as the absent-category
/// sentinel, entry bytes in [0,255], counts/sizes non-negative.
struct FeatureVector {
    std::array<double, FEATURE_COUNT> values{};
    std::array<FeatureStatus, FEATURE_COUNT> status{};
    std::string sample_digest;
    int64_t timestamp = 0;

    double get(int feature_id) const { return values[feature_id - 1]; }
    void set(int feature_id, double v) { values[feature_id - 1] = v; }
    void set_defaulted(int feature_id, double v) {
        values[feature_id - 1] = v;
        status[feature_id - 1] = FeatureStatus::defaulted;
    }
    bool ok(int feature_id) const { return status[feature_id - 1] == FeatureStatus::ok; }
};

enum class FeatureCategory { metadata, section, entropy, entry_bytes, imports, resource };

enum class FeatureKind { boolean, integer, floating, byte };

struct FeatureInfo {
    int id;
    FeatureCategory category;
    FeatureKind kind;
    std::string description;
};

/// Catalog of all 119 features, ordered by id.
const std::vector<FeatureInfo>& feature_catalog();

const FeatureInfo& feature_info(int feature_id);

/// Section names considered "standard" for features 22-24 and 35. The list is
/// a convention taken from common PE tooling and may be overridden.
const std::vector<std::string>& default_standard_sections();

struct ExtractOptions {
    std::vector<std::string> standard_sections = default_standard_sections();
};

/// Shannon entropy over byte-value frequencies, in bits per byte [0,8].
/// Empty input yields 0.
double shannon_entropy(std::span<const uint8_t> data);

// Per-category extractors. Each fills only its id range of `out`.
void extract_metadata(const pe::PeFile& pe, FeatureVector& out);                 // 1..21
void extract_section_features(const pe::PeFile& pe, FeatureVector& out,
                              const ExtractOptions& opt = {});                   // 22..42
void extract_entropy_features(const pe::PeFile& pe, FeatureVector& out);         // 43..48
void extract_entry_import_resource(const pe::PeFile& pe, FeatureVector& out);    // 49..119

/// Runs all extractors, computes the sample digest from the raw bytes and
/// stamps the given timestamp. Pure function of (pe.raw, timestamp).
FeatureVector extract_all(const pe::PeFile& pe, int64_t timestamp,
                          const ExtractOptions& opt = {});

/// Names imported from the fixed malicious-API list counted by feature 115.
const std::vector<std::string>& malicious_api_names();

} // namespace packdet
