#include "packdet/features.hpp"

#include "packdet/digest.hpp"
#include "packdet/error.hpp"

#include <algorithm>
#include <array>
#include <cmath>

namespace packdet {

namespace {

const pe::SectionInfo* find_entry_section(const pe::PeFile& pe) {
    uint64_t rva = pe.optional_header.address_of_entry_point;
    for (const pe::SectionInfo& s : pe.sections) {
        uint64_t extent = std::max(s.virtual_size, s.size_of_raw_data);
        if (rva >= s.virtual_address && rva - s.virtual_address < extent) return &s;
    }
    return nullptr;
}

bool is_code_section(const pe::SectionInfo& s) {
    return s.has(pe::SCN_CNT_CODE) || s.name == ".text";
}

bool is_standard_section(const pe::SectionInfo& s, const std::vector<std::string>& standard) {
    return std::find(standard.begin(), standard.end(), s.name) != standard.end();
}

std::vector<uint8_t> section_raw(const pe::PeFile& pe, const pe::SectionInfo& s) {
    uint64_t end = std::min<uint64_t>(pe.raw.size(), s.pointer_to_raw_data + s.size_of_raw_data);
    uint64_t begin = std::min<uint64_t>(s.pointer_to_raw_data, end);
    return {pe.raw.begin() + static_cast<ptrdiff_t>(begin),
            pe.raw.begin() + static_cast<ptrdiff_t>(end)};
}

double entropy_of_sections(const pe::PeFile& pe, auto&& pred) {
    std::vector<uint8_t> buf;
    bool any = false;
    for (const pe::SectionInfo& s : pe.sections) {
        if (!pred(s)) continue;
        any = true;
        auto b = section_raw(pe, s);
        buf.insert(buf.end(), b.begin(), b.end());
    }
    if (!any) return -1.0;
    return shannon_entropy(buf);
}

} // namespace

double shannon_entropy(std::span<const uint8_t> data) {
    if (data.empty()) return 0.0;
    std::array<uint64_t, 256> counts{};
    for (uint8_t b : data) ++counts[b];
    const double n = static_cast<double>(data.size());
    double sum = 0.0;
    for (uint64_t c : counts) {
        if (c == 0) continue;
        double p = static_cast<double>(c) / n;
        sum += p * std::log2(p);
    }
    return sum == 0.0 ? 0.0 : -sum;
}

void extract_metadata(const pe::PeFile& pe, FeatureVector& out) {
    const pe::OptionalHeader& oh = pe.optional_header;
    static constexpr uint16_t bits[8] = {
        pe::DLLCH_DYNAMIC_BASE, pe::DLLCH_FORCE_INTEGRITY, pe::DLLCH_NX_COMPAT,
        pe::DLLCH_NO_ISOLATION, pe::DLLCH_NO_SEH,          pe::DLLCH_NO_BIND,
        pe::DLLCH_WDM_DRIVER,   pe::DLLCH_TS_AWARE,
    };
    for (int i = 0; i < 8; ++i) {
        out.set(1 + i, (oh.dll_characteristics & bits[i]) ? 1.0 : 0.0);
    }
    out.set(9, static_cast<double>(oh.checksum));
    out.set(10, static_cast<double>(oh.image_base));
    out.set(11, static_cast<double>(oh.base_of_code));
    out.set(12, static_cast<double>(oh.major_os_version));
    out.set(13, static_cast<double>(oh.minor_os_version));
    out.set(14, static_cast<double>(oh.size_of_image));
    out.set(15, static_cast<double>(oh.size_of_code));
    out.set(16, static_cast<double>(oh.size_of_headers));
    out.set(17, static_cast<double>(oh.size_of_initialized_data));
    out.set(18, static_cast<double>(oh.size_of_uninitialized_data));
    out.set(19, static_cast<double>(oh.size_of_stack_reserve));
    out.set(20, static_cast<double>(oh.size_of_stack_commit));
    out.set(21, static_cast<double>(oh.section_alignment));
}

void extract_section_features(const pe::PeFile& pe, FeatureVector& out,
                              const ExtractOptions& opt) {
    int standard = 0, exec = 0, writable = 0, wx = 0, rx = 0, rw = 0, rwx = 0;
    int zero_raw = 0, virtual_above_raw = 0;
    bool code_not_exec = false, exec_not_code = false, any_code = false;
    bool misaligned = false;
    double max_ratio = 0.0, min_ratio = 0.0;
    bool ratio_seen = false;

    for (const pe::SectionInfo& s : pe.sections) {
        if (is_standard_section(s, opt.standard_sections)) ++standard;
        bool r = s.readable(), w = s.writable(), x = s.executable();
        if (x) ++exec;
        if (w) ++writable;
        if (w && x) ++wx;
        if (r && x) ++rx;
        if (r && w) ++rw;
        if (r && w && x) ++rwx;
        if (is_code_section(s)) {
            any_code = true;
            if (!x) code_not_exec = true;
        } else if (x) {
            exec_not_code = true;
        }
        if (s.size_of_raw_data == 0) ++zero_raw;
        if (s.virtual_size > s.size_of_raw_data) ++virtual_above_raw;
        if (s.virtual_size > 0) {
            double ratio = static_cast<double>(s.size_of_raw_data) /
                           static_cast<double>(s.virtual_size);
            if (!ratio_seen) {
                max_ratio = min_ratio = ratio;
                ratio_seen = true;
            } else {
                max_ratio = std::max(max_ratio, ratio);
                min_ratio = std::min(min_ratio, ratio);
            }
        }
        if (pe.optional_header.file_alignment != 0 &&
            s.pointer_to_raw_data % pe.optional_header.file_alignment != 0) {
            misaligned = true;
        }
    }
    int total = static_cast<int>(pe.sections.size());

    out.set(22, standard);
    out.set(23, total - standard);
    out.set(24, total > 0 ? static_cast<double>(standard) / total : 0.0);
    out.set(25, exec);
    out.set(26, writable);
    out.set(27, wx);
    out.set(28, rx);
    out.set(29, rw);
    out.set(30, rwx);
    out.set(31, code_not_exec ? 1.0 : 0.0);
    out.set(32, exec_not_code ? 1.0 : 0.0);
    out.set(33, any_code ? 0.0 : 1.0);

    const pe::SectionInfo* entry = find_entry_section(pe);
    out.set(34, entry && is_code_section(*entry) ? 0.0 : 1.0);
    out.set(35, entry && is_standard_section(*entry, opt.standard_sections) ? 0.0 : 1.0);
    out.set(36, entry && entry->executable() ? 0.0 : 1.0);
    if (entry) {
        out.set(37, entry->virtual_size > 0
                        ? static_cast<double>(entry->size_of_raw_data) /
                              static_cast<double>(entry->virtual_size)
                        : 0.0);
    } else {
        out.set_defaulted(37, 0.0);
    }
    out.set(38, zero_raw);
    out.set(39, virtual_above_raw);
    out.set(40, ratio_seen ? max_ratio : 0.0);
    out.set(41, ratio_seen ? min_ratio : 0.0);
    out.set(42, misaligned ? 1.0 : 0.0);
}

void extract_entropy_features(const pe::PeFile& pe, FeatureVector& out) {
    out.set(43, entropy_of_sections(pe, [](const pe::SectionInfo& s) {
                return is_code_section(s);
            }));
    out.set(44, entropy_of_sections(pe, [](const pe::SectionInfo& s) {
                return !is_code_section(s) && (s.has(pe::SCN_CNT_INITIALIZED_DATA) ||
                                               s.has(pe::SCN_CNT_UNINITIALIZED_DATA));
            }));
    out.set(45, entropy_of_sections(pe, [](const pe::SectionInfo& s) {
                return s.name == ".rsrc";
            }));

    uint64_t header_len =
        std::min<uint64_t>(pe.optional_header.size_of_headers, pe.raw.size());
    if (header_len == 0) {
        out.set(46, -1.0);
    } else {
        out.set(46, shannon_entropy({pe.raw.data(), static_cast<size_t>(header_len)}));
    }
    out.set(47, shannon_entropy(pe.raw));

    const pe::SectionInfo* entry = find_entry_section(pe);
    if (entry) {
        auto bytes = section_raw(pe, *entry);
        out.set(48, bytes.empty() ? -1.0 : shannon_entropy(bytes));
    } else {
        out.set_defaulted(48, -1.0);
    }
}

void extract_entry_import_resource(const pe::PeFile& pe, FeatureVector& out) {
    try {
        pe::EntryBytes eb = pe::entry_bytes(pe, 64);
        for (int i = 0; i < 64; ++i) {
            if (eb.short_read && static_cast<size_t>(i) >= eb.read_count) {
                out.set_defaulted(49 + i, 0.0);
            } else {
                out.set(49 + i, static_cast<double>(eb.bytes[i]));
            }
        }
    } catch (const Error& e) {
        if (e.code() != Errc::unmapped_rva) throw;
        for (int i = 0; i < 64; ++i) out.set_defaulted(49 + i, 0.0);
    }

    const pe::ImportTable& it = pe.import_table;
    const auto& bad = malicious_api_names();
    int malicious = 0;
    for (const std::string& name : it.imported_function_names) {
        if (std::find(bad.begin(), bad.end(), name) != bad.end()) ++malicious;
    }
    out.set(113, static_cast<double>(it.dll_names.size()));
    out.set(114, static_cast<double>(it.idt_function_count));
    out.set(115, static_cast<double>(malicious));
    out.set(116, it.idt_function_count > 0
                     ? static_cast<double>(malicious) /
                           static_cast<double>(it.idt_function_count)
                     : 0.0);
    out.set(117, static_cast<double>(it.iat_entry_count));
    if (it.parse_warning) {
        for (int id = 113; id <= 117; ++id) out.status[id - 1] = FeatureStatus::defaulted;
    }

    out.set(118, pe.debug_directory_present ? 1.0 : 0.0);
    out.set(119, static_cast<double>(pe.resource_count));
}

FeatureVector extract_all(const pe::PeFile& pe, int64_t timestamp, const ExtractOptions& opt) {
    FeatureVector v;
    extract_metadata(pe, v);
    extract_section_features(pe, v, opt);
    extract_entropy_features(pe, v);
    extract_entry_import_resource(pe, v);
    v.sample_digest = sha256_hex(pe.raw);
    v.timestamp = timestamp;
    return v;
}

const std::vector<std::string>& default_standard_sections() {
    static const std::vector<std::string> names = {
        ".text", ".code", ".data", ".rdata", ".bss",   ".idata",
        ".edata", ".rsrc", ".reloc", ".tls",  ".debug",
    };
    return names;
}

const std::vector<std::string>& malicious_api_names() {
    static const std::vector<std::string> names = {
        "GetProcAddress",  "LoadLibraryA",     "LoadLibrary",     "ExitProcess",
        "GetModuleHandleA", "VirtualAlloc",    "VirtualFree",     "GetModuleFileNameA",
        "CreateFileA",      "RegQueryValueExA", "MessageBoxA",    "GetCommandLineA",
        "VirtualProtect",   "GetStartupInfoA", "GetStdHandle",    "RegOpenKeyExA",
    };
    return names;
}

namespace {

std::vector<FeatureInfo> build_catalog() {
    std::vector<FeatureInfo> cat;
    cat.reserve(FEATURE_COUNT);
    auto add = [&](int id, FeatureCategory c, FeatureKind k, std::string d) {
        cat.push_back({id, c, k, std::move(d)});
    };
    using C = FeatureCategory;
    using K = FeatureKind;

    add(1, C::metadata, K::boolean, "dll characteristics: dynamic base");
    add(2, C::metadata, K::boolean, "dll characteristics: forced integrity checks");
    add(3, C::metadata, K::boolean, "dll characteristics: nx compatible");
    add(4, C::metadata, K::boolean, "dll characteristics: no isolation");
    add(5, C::metadata, K::boolean, "dll characteristics: no structured exception handling");
    add(6, C::metadata, K::boolean, "dll characteristics: no bind");
    add(7, C::metadata, K::boolean, "dll characteristics: wdm driver");
    add(8, C::metadata, K::boolean, "dll characteristics: terminal server aware");
    add(9, C::metadata, K::integer, "header checksum field");
    add(10, C::metadata, K::integer, "preferred image base");
    add(11, C::metadata, K::integer, "base of code rva");
    add(12, C::metadata, K::integer, "required os major version");
    add(13, C::metadata, K::integer, "required os minor version");
    add(14, C::metadata, K::integer, "size of image");
    add(15, C::metadata, K::integer, "total size of code sections");
    add(16, C::metadata, K::integer, "size of headers");
    add(17, C::metadata, K::integer, "total size of initialized data");
    add(18, C::metadata, K::integer, "total size of uninitialized data");
    add(19, C::metadata, K::integer, "stack reserve size");
    add(20, C::metadata, K::integer, "stack commit size");
    add(21, C::metadata, K::integer, "section alignment");

    add(22, C::section, K::integer, "standard-name section count");
    add(23, C::section, K::integer, "non-standard-name section count");
    add(24, C::section, K::floating, "standard sections over all sections");
    add(25, C::section, K::integer, "executable section count");
    add(26, C::section, K::integer, "writable section count");
    add(27, C::section, K::integer, "writable+executable section count");
    add(28, C::section, K::integer, "readable+executable section count");
    add(29, C::section, K::integer, "readable+writable section count");
    add(30, C::section, K::integer, "readable+writable+executable section count");
    add(31, C::section, K::boolean, "a code section is not executable");
    add(32, C::section, K::boolean, "an executable section is not a code section");
    add(33, C::section, K::boolean, "no code section present");
    add(34, C::section, K::boolean, "entry point outside code sections");
    add(35, C::section, K::boolean, "entry point outside standard sections");
    add(36, C::section, K::boolean, "entry point outside executable sections");
    add(37, C::section, K::floating, "entry section raw/virtual size ratio");
    add(38, C::section, K::integer, "sections with zero raw size");
    add(39, C::section, K::integer, "sections with virtual size above raw size");
    add(40, C::section, K::floating, "max raw/virtual size ratio");
    add(41, C::section, K::floating, "min raw/virtual size ratio");
    add(42, C::section, K::boolean, "a raw data pointer breaks file alignment");

    add(43, C::entropy, K::floating, "entropy of code sections");
    add(44, C::entropy, K::floating, "entropy of data sections");
    add(45, C::entropy, K::floating, "entropy of the resource section");
    add(46, C::entropy, K::floating, "entropy of the header bytes");
    add(47, C::entropy, K::floating, "entropy of the whole file");
    add(48, C::entropy, K::floating, "entropy of the entry-point section");

    for (int i = 0; i < 64; ++i) {
        add(49 + i, C::entry_bytes, K::byte, "entry byte +" + std::to_string(i));
    }

    add(113, C::imports, K::integer, "imported dll count");
    add(114, C::imports, K::integer, "imported function count (import directory)");
    add(115, C::imports, K::integer, "imports from the malicious-api list");
    add(116, C::imports, K::floating, "malicious over total imported functions");
    add(117, C::imports, K::integer, "import address table entry count");
    add(118, C::resource, K::boolean, "debug directory present");
    add(119, C::resource, K::integer, "resource leaf count");
    return cat;
}

} // namespace

const std::vector<FeatureInfo>& feature_catalog() {
    static const std::vector<FeatureInfo> cat = build_catalog();
    return cat;
}

const FeatureInfo& feature_info(int feature_id) {
    if (feature_id < 1 || feature_id > FEATURE_COUNT) {
        raise(Errc::bad_argument, "feature id out of range: " + std::to_string(feature_id));
    }
    return feature_catalog()[static_cast<size_t>(feature_id - 1)];
}

} // namespace packdet
