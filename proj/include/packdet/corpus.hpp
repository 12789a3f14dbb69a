#pragma once

#include "packdet/dataset.hpp"
#include "packdet/features.hpp"
#include "packdet/pe_parser.hpp"
#include "packdet/timeutil.hpp"

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

namespace packdet::corpus {

struct SectionFill {
    enum class Kind { zeros, text_like, random_bytes, mixed };
    Kind kind = Kind::text_like;
    double mix_ratio = 0.0; // mixed: fraction of uniformly random bytes
};

struct SectionPlan {
    std::string name;
    uint32_t characteristics = 0;
    uint32_t raw_size = 0;
    uint32_t virtual_size = 0; // 0 = same as raw_size
    SectionFill fill;
};

/// Blueprint for one synthetic PE. packed_default() exhibits the classic
/// packer cues (packer section names, an RWX section, entry outside the
/// standard sections, a high-entropy entry section, virtual size above raw);
/// plain_default() exhibits none of them.
struct SynthProfile {
    enum class ClassHint { plain, packed };

    ClassHint class_hint = ClassHint::plain;
    pe::PeFormat format = pe::PeFormat::pe32;
    std::vector<SectionPlan> sections;
    int entry_section = 0;
    uint32_t entry_offset = 0x100; // within the entry section's raw data
    std::vector<uint8_t> entry_stub;
    int import_section = -1;
    std::vector<std::pair<std::string, std::vector<std::string>>> imports;
    uint32_t ordinal_imports = 0; // extra by-ordinal thunks on the first dll
    int resource_section = -1;
    uint32_t resource_count = 0;
    bool debug_directory = false;
    uint64_t stack_reserve = 1048576;
    uint64_t stack_commit = 4096;
    uint32_t section_alignment = 4096;
    uint32_t file_alignment = 512;
    uint16_t dll_characteristics = 0;
    uint16_t os_major = 6;
    uint16_t os_minor = 0;
    uint32_t checksum = 0;
    int64_t timestamp = 0;

    static SynthProfile plain_default();
    static SynthProfile packed_default();
};

struct SynthLayout {
    uint64_t entry_rva = 0;
    uint64_t entry_file_offset = 0;
    std::vector<std::pair<uint64_t, uint64_t>> sections; // (virtual address, raw offset)
};

struct SynthPe {
    std::vector<uint8_t> bytes;
    SynthLayout layout;
};

/// Builds the image. Deterministic for a given (profile, seed); the result
/// always parses. Raises Error{bad_profile} for plans that cannot be laid
/// out (bad section indices, structures that overflow their section, names
/// over 8 bytes).
SynthPe synth_pe(const SynthProfile& profile, uint64_t seed);

struct CorpusSample {
    SynthProfile profile;
    uint64_t seed = 0;
    std::string dataset;
};

struct Scenario {
    std::string name;
    std::vector<CorpusSample> samples;
};

/// Cleanly separable half packed / half plain corpus ("default"), a corpus
/// whose cues overlap between the classes ("hard"), and a chronological
/// corpus whose packed cues fade over four periods after a gap ("drift").
Scenario scenario_default(size_t count, uint64_t seed);
Scenario scenario_hard(size_t count, uint64_t seed);
Scenario scenario_drift(size_t baseline_count, size_t period_count, uint64_t seed);
Scenario make_scenario(const std::string& name, size_t count, uint64_t seed);

// ---------------------------------------------------------------------------
// feature store

struct StoreRow {
    std::string digest;
    int64_t timestamp = 0;
    int label = -1; // -1 = unlabeled
    std::array<double, FEATURE_COUNT> values{};
};

struct FeatureStore {
    int version = 1;
    std::vector<StoreRow> rows;
};

StoreRow row_from_vector(const FeatureVector& v, int label = -1);

/// CSV with a "# feature-store v1" line followed by the fixed header
/// "digest,timestamp,label,f1,...,f119"; floats in shortest round-trip form,
/// UTF-8, LF. Raises Error{corrupt_row} on non-finite values or duplicate
/// digests and Error{format_version_mismatch} on foreign files.
void save_store(const FeatureStore& store, const std::string& path);
FeatureStore load_store(const std::string& path);

FeatureStore filter_time_range(const FeatureStore& store, const TimeRange& range);
Dataset to_dataset(const FeatureStore& store);

// ---------------------------------------------------------------------------
// manifest

struct ManifestDataset {
    std::string name;
    std::map<std::string, int> profile_mix; // class hint -> count
    int64_t time_begin = 0;
    int64_t time_end = 0;
    size_t count = 0;
};

struct Manifest {
    int version = 1;
    std::string scenario;
    uint64_t seed = 0;
    std::vector<ManifestDataset> datasets;
};

Manifest manifest_for(const Scenario& scenario, uint64_t seed);
void save_manifest(const Manifest& m, const std::string& path);
Manifest load_manifest(const std::string& path);

} // namespace packdet::corpus
