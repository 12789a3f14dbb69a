#include "packdet/corpus.hpp"

#include "packdet/error.hpp"
#include "packdet/rng.hpp"

#include <json.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace packdet::corpus {

namespace {

int64_t ts(const char* iso) { return parse_iso8601_utc(iso); }

int64_t uniform_ts(Rng& rng, int64_t begin, int64_t end) {
    return begin + static_cast<int64_t>(rng.below(static_cast<uint64_t>(end - begin + 1)));
}

const std::vector<std::string>& optional_plain_imports() {
    static const std::vector<std::string> names = {
        "CreateFileA",   "GetModuleHandleA", "GetModuleFileNameA", "lstrlenA",
        "GetTickCount",  "Sleep",            "SetFilePointer",     "FlushFileBuffers",
        "GetProcessHeap", "LocalAlloc",      "LocalFree",          "FormatMessageA",
    };
    return names;
}

SynthProfile randomized_plain(Rng& rng) {
    SynthProfile p = SynthProfile::plain_default();
    const uint32_t text_sizes[] = {4096, 8192, 12288, 16384};
    const uint32_t data_sizes[] = {2048, 4096, 8192};
    p.sections[0].raw_size = text_sizes[rng.below(4)];
    p.sections[2].raw_size = data_sizes[rng.below(3)];
    p.entry_offset = 0x100 * static_cast<uint32_t>(1 + rng.below(3));
    if (rng.unit() < 0.3) p.entry_stub = {0xE8, 0x00, 0x00, 0x00, 0x00, 0x5D, 0x8B, 0xC5};
    p.resource_count = static_cast<uint32_t>(rng.below(9));
    if (p.resource_count == 0) p.resource_section = -1;
    p.checksum = 0x1000 + static_cast<uint32_t>(rng.below(1000000));
    if (rng.unit() < 0.25) p.os_major = 5, p.os_minor = 1;
    if (rng.unit() < 0.2) p.dll_characteristics &= static_cast<uint16_t>(~pe::DLLCH_DYNAMIC_BASE);
    p.stack_commit = rng.unit() < 0.5 ? 4096 : 8192;
    for (const std::string& extra : optional_plain_imports()) {
        if (rng.unit() < 0.4) p.imports[0].second.push_back(extra);
    }
    if (rng.unit() < 0.3) p.debug_directory = false;
    return p;
}

SynthProfile randomized_packed(Rng& rng) {
    SynthProfile p = SynthProfile::packed_default();
    struct NamePair {
        const char* a;
        const char* b;
    };
    const NamePair pairs[] = {{"UPX0", "UPX1"}, {".aspack", ".adata"}, {"MPRESS1", "MPRESS2"}};
    const NamePair& pair = pairs[rng.below(3)];
    p.sections[0].name = pair.a;
    p.sections[1].name = pair.b;
    const uint32_t body_sizes[] = {8192, 16384, 24576};
    uint32_t body = body_sizes[rng.below(3)];
    p.sections[1].raw_size = body;
    p.sections[1].virtual_size = body + 4096;
    p.sections[0].virtual_size = 16384 + static_cast<uint32_t>(rng.below(4)) * 8192;
    p.entry_offset = 0x400 + 0x80 * static_cast<uint32_t>(rng.below(4));
    if (rng.unit() < 0.4) p.imports[0].second.push_back("VirtualAlloc");
    if (rng.unit() < 0.3) p.imports[0].second.push_back("VirtualFree");
    p.resource_count = static_cast<uint32_t>(rng.below(3));
    if (p.resource_count == 0) p.resource_section = -1;
    p.os_major = rng.unit() < 0.5 ? 4 : 5;
    p.os_minor = 0;
    return p;
}

// Overlays packer cues onto the plain base distribution, each firing with
// probability `theta`. Every non-cue property keeps the plain distribution,
// so a sample with no fired cue is indistinguishable from a plain one.
SynthProfile cued_profile(Rng& rng, double theta, SynthProfile::ClassHint hint) {
    SynthProfile p = randomized_plain(rng);
    p.class_hint = hint;
    bool cue_name = rng.unit() < theta;
    bool cue_rwx = rng.unit() < theta;
    bool cue_entry = rng.unit() < theta;
    bool cue_entropy = rng.unit() < theta;
    bool cue_virtual = rng.unit() < theta;
    bool cue_imports = rng.unit() < theta;
    if (cue_name) p.sections[2].name = "UPX0";
    if (cue_rwx) p.sections[2].characteristics |= pe::SCN_MEM_EXECUTE;
    if (cue_entry) {
        p.entry_section = 2;
        p.entry_offset = 0x80;
    }
    if (cue_entropy) {
        p.sections[static_cast<size_t>(p.entry_section)].fill = {
            SectionFill::Kind::random_bytes, 0};
    }
    if (cue_virtual) {
        p.sections[2].virtual_size = p.sections[2].raw_size * 2;
    }
    if (cue_imports) {
        p.imports = {{"KERNEL32.DLL", {"LoadLibraryA", "GetProcAddress", "VirtualProtect"}}};
    }
    return p;
}

SynthProfile hard_profile(Rng& rng, bool packed_hint) {
    return cued_profile(rng, packed_hint ? 0.65 : 0.35,
                        packed_hint ? SynthProfile::ClassHint::packed
                                    : SynthProfile::ClassHint::plain);
}

// Drift-period packed profile: cue strength decays with `theta`; at low
// theta the sample is nearly indistinguishable from a plain one.
SynthProfile drifted_packed(Rng& rng, double theta) {
    return cued_profile(rng, theta, SynthProfile::ClassHint::packed);
}

} // namespace

Scenario scenario_default(size_t count, uint64_t seed) {
    Scenario sc;
    sc.name = "default";
    Rng rng(seed);
    int64_t begin = ts("2019-10-01"), end = ts("2020-02-28");
    size_t plain = count - count / 2;
    for (size_t i = 0; i < count; ++i) {
        CorpusSample s;
        s.dataset = "default";
        s.seed = rng.derive(i);
        s.profile = i < plain ? randomized_plain(rng) : randomized_packed(rng);
        s.profile.timestamp = uniform_ts(rng, begin, end);
        sc.samples.push_back(std::move(s));
    }
    return sc;
}

Scenario scenario_hard(size_t count, uint64_t seed) {
    Scenario sc;
    sc.name = "hard";
    Rng rng(seed);
    int64_t begin = ts("2019-10-01"), end = ts("2020-02-28");
    size_t plain = count - count / 2;
    for (size_t i = 0; i < count; ++i) {
        CorpusSample s;
        s.dataset = "hard";
        s.seed = rng.derive(i);
        s.profile = hard_profile(rng, i >= plain);
        s.profile.timestamp = uniform_ts(rng, begin, end);
        sc.samples.push_back(std::move(s));
    }
    return sc;
}

Scenario scenario_drift(size_t baseline_count, size_t period_count, uint64_t seed) {
    Scenario sc;
    sc.name = "drift";
    Rng rng(seed);

    int64_t b0 = ts("2019-10-01"), b1 = ts("2020-02-28");
    size_t plain = baseline_count - baseline_count / 2;
    for (size_t i = 0; i < baseline_count; ++i) {
        CorpusSample s;
        s.dataset = "baseline";
        s.seed = rng.derive(i);
        s.profile = i < plain ? randomized_plain(rng) : drifted_packed(rng, 1.0);
        s.profile.timestamp = uniform_ts(rng, b0, b1);
        sc.samples.push_back(std::move(s));
    }

    const double theta[4] = {0.75, 0.55, 0.35, 0.15};
    for (int period = 1; period <= 4; ++period) {
        std::string name = "period" + std::to_string(period);
        int64_t p0 = ts("2020-04-01") + static_cast<int64_t>(period - 1) * 14 * 86400;
        int64_t p1 = p0 + 14 * 86400 - 1;
        size_t pplain = period_count - period_count / 2;
        for (size_t i = 0; i < period_count; ++i) {
            CorpusSample s;
            s.dataset = name;
            s.seed = rng.derive(1000ULL * static_cast<uint64_t>(period) + i);
            s.profile = i < pplain ? randomized_plain(rng)
                                   : drifted_packed(rng, theta[period - 1]);
            s.profile.timestamp = uniform_ts(rng, p0, p1);
            sc.samples.push_back(std::move(s));
        }
    }
    return sc;
}

Scenario make_scenario(const std::string& name, size_t count, uint64_t seed) {
    if (name == "default") return scenario_default(count, seed);
    if (name == "hard") return scenario_hard(count, seed);
    if (name == "drift") return scenario_drift(count, count / 4, seed);
    raise(Errc::bad_argument, "unknown scenario: " + name);
}

// ---------------------------------------------------------------------------
// feature store

namespace {

std::string format_double(double v) {
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, end);
}

double parse_double(const std::string& s, size_t line_no) {
    double v = 0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size()) {
        raise(Errc::corrupt_row, "bad number at line " + std::to_string(line_no));
    }
    return v;
}

std::string store_header() {
    std::string h = "digest,timestamp,label";
    for (int i = 1; i <= FEATURE_COUNT; ++i) h += ",f" + std::to_string(i);
    return h;
}

} // namespace

StoreRow row_from_vector(const FeatureVector& v, int label) {
    StoreRow row;
    row.digest = v.sample_digest;
    row.timestamp = v.timestamp;
    row.label = label;
    row.values = v.values;
    return row;
}

void save_store(const FeatureStore& store, const std::string& path) {
    std::set<std::string> digests;
    for (const StoreRow& r : store.rows) {
        if (!digests.insert(r.digest).second) {
            raise(Errc::corrupt_row, "duplicate digest: " + r.digest);
        }
        for (double v : r.values) {
            if (!std::isfinite(v)) raise(Errc::corrupt_row, "non-finite value for " + r.digest);
        }
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) raise(Errc::bad_argument, "cannot write store: " + path);
    out << "# feature-store v" << store.version << "\n" << store_header() << "\n";
    for (const StoreRow& r : store.rows) {
        out << r.digest << ',' << r.timestamp << ',';
        if (r.label >= 0) out << r.label;
        for (double v : r.values) out << ',' << format_double(v);
        out << '\n';
    }
}

FeatureStore load_store(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) raise(Errc::bad_argument, "cannot open store: " + path);
    std::string line;
    if (!std::getline(in, line) || line.rfind("# feature-store v", 0) != 0) {
        raise(Errc::format_version_mismatch, "missing feature-store version line");
    }
    FeatureStore store;
    {
        int v = 0;
        auto* b = line.data() + 17;
        auto [p, ec] = std::from_chars(b, line.data() + line.size(), v);
        if (ec != std::errc() || v != 1) {
            raise(Errc::format_version_mismatch, "unsupported feature-store version: " + line);
        }
        store.version = v;
    }
    if (!std::getline(in, line) || line != store_header()) {
        raise(Errc::format_version_mismatch, "unexpected feature-store header");
    }

    std::set<std::string> digests;
    size_t line_no = 2;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::vector<std::string> fields;
        std::istringstream ls(line);
        std::string tok;
        while (std::getline(ls, tok, ',')) fields.push_back(tok);
        if (!line.empty() && line.back() == ',') fields.push_back("");
        if (fields.size() != 3 + FEATURE_COUNT) {
            raise(Errc::corrupt_row, "wrong field count at line " + std::to_string(line_no));
        }
        StoreRow r;
        r.digest = fields[0];
        if (r.digest.empty() || !digests.insert(r.digest).second) {
            raise(Errc::corrupt_row, "bad or duplicate digest at line " + std::to_string(line_no));
        }
        r.timestamp = static_cast<int64_t>(parse_double(fields[1], line_no));
        if (fields[2].empty()) {
            r.label = -1;
        } else if (fields[2] == "0" || fields[2] == "1") {
            r.label = fields[2][0] - '0';
        } else {
            raise(Errc::corrupt_row, "bad label at line " + std::to_string(line_no));
        }
        for (int i = 0; i < FEATURE_COUNT; ++i) {
            double v = parse_double(fields[static_cast<size_t>(3 + i)], line_no);
            if (!std::isfinite(v)) {
                raise(Errc::corrupt_row, "non-finite value at line " + std::to_string(line_no));
            }
            r.values[static_cast<size_t>(i)] = v;
        }
        store.rows.push_back(std::move(r));
    }
    return store;
}

FeatureStore filter_time_range(const FeatureStore& store, const TimeRange& range) {
    FeatureStore out;
    out.version = store.version;
    for (const StoreRow& r : store.rows) {
        if (range.contains(r.timestamp)) out.rows.push_back(r);
    }
    return out;
}

Dataset to_dataset(const FeatureStore& store) {
    Dataset d;
    d.feature_ids.resize(FEATURE_COUNT);
    for (int i = 0; i < FEATURE_COUNT; ++i) d.feature_ids[static_cast<size_t>(i)] = i + 1;
    d.x = Matrix(store.rows.size(), FEATURE_COUNT);
    for (size_t r = 0; r < store.rows.size(); ++r) {
        std::copy(store.rows[r].values.begin(), store.rows[r].values.end(), d.x.row(r).begin());
        d.labels.push_back(store.rows[r].label);
        d.timestamps.push_back(store.rows[r].timestamp);
        d.digests.push_back(store.rows[r].digest);
    }
    return d;
}

// ---------------------------------------------------------------------------
// manifest

Manifest manifest_for(const Scenario& scenario, uint64_t seed) {
    Manifest m;
    m.scenario = scenario.name;
    m.seed = seed;
    std::vector<std::string> order;
    std::map<std::string, ManifestDataset> by_name;
    for (const CorpusSample& s : scenario.samples) {
        auto [it, fresh] = by_name.try_emplace(s.dataset);
        ManifestDataset& d = it->second;
        if (fresh) {
            d.name = s.dataset;
            d.time_begin = s.profile.timestamp;
            d.time_end = s.profile.timestamp;
            order.push_back(s.dataset);
        }
        d.time_begin = std::min(d.time_begin, s.profile.timestamp);
        d.time_end = std::max(d.time_end, s.profile.timestamp);
        const char* hint =
            s.profile.class_hint == SynthProfile::ClassHint::packed ? "packed" : "plain";
        ++d.profile_mix[hint];
        ++d.count;
    }
    for (const std::string& name : order) m.datasets.push_back(by_name[name]);
    return m;
}

void save_manifest(const Manifest& m, const std::string& path) {
    nlohmann::json j;
    j["version"] = m.version;
    j["scenario"] = m.scenario;
    j["seed"] = m.seed;
    j["datasets"] = nlohmann::json::array();
    for (const ManifestDataset& d : m.datasets) {
        j["datasets"].push_back({
            {"name", d.name},
            {"profile_mix", d.profile_mix},
            {"time_range", {format_iso8601_utc(d.time_begin), format_iso8601_utc(d.time_end)}},
            {"count", d.count},
        });
    }
    std::ofstream out(path);
    if (!out) raise(Errc::bad_argument, "cannot write manifest: " + path);
    out << j.dump(2) << '\n';
}

Manifest load_manifest(const std::string& path) {
    std::ifstream in(path);
    if (!in) raise(Errc::bad_argument, "cannot open manifest: " + path);
    nlohmann::json j;
    try {
        in >> j;
        Manifest m;
        m.version = j.at("version").get<int>();
        if (m.version != 1) raise(Errc::format_version_mismatch, "unsupported manifest version");
        m.scenario = j.at("scenario").get<std::string>();
        m.seed = j.at("seed").get<uint64_t>();
        for (const auto& dj : j.at("datasets")) {
            ManifestDataset d;
            d.name = dj.at("name").get<std::string>();
            d.profile_mix = dj.at("profile_mix").get<std::map<std::string, int>>();
            d.time_begin = parse_iso8601_utc(dj.at("time_range")[0].get<std::string>());
            d.time_end = parse_iso8601_utc(dj.at("time_range")[1].get<std::string>());
            d.count = dj.at("count").get<size_t>();
            m.datasets.push_back(std::move(d));
        }
        return m;
    } catch (const nlohmann::json::exception& e) {
        raise(Errc::corrupt_row, std::string("manifest: ") + e.what());
    }
}

} // namespace packdet::corpus
