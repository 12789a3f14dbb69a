#include "packdet/pe_parser.hpp"

#include "packdet/error.hpp"

#include <algorithm>
#include <optional>
#include <set>

namespace packdet::pe {

namespace {

constexpr uint32_t PE_SIGNATURE = 0x00004550; // "PE\0\0"
constexpr uint16_t DOS_MAGIC = 0x5A4D;        // "MZ"
constexpr uint16_t OPT_MAGIC_PE32 = 0x10B;
constexpr uint16_t OPT_MAGIC_PE32PLUS = 0x20B;

constexpr size_t MAX_IMPORT_DESCRIPTORS = 4096;
constexpr size_t MAX_THUNKS_PER_DLL = 65536;
constexpr size_t MAX_NAME_LEN = 512;
constexpr int MAX_RESOURCE_DEPTH = 32;
constexpr size_t MAX_RESOURCE_ENTRIES = 65536;

// Bounds-checked little-endian reader. The throwing accessors are used while
// parsing mandatory structure; try_* accessors drive the directories that
// must degrade instead of failing the file.
class Reader {
public:
    explicit Reader(std::span<const uint8_t> d) : d_(d) {}

    size_t size() const { return d_.size(); }

    bool in_bounds(uint64_t off, uint64_t len) const {
        return off <= d_.size() && len <= d_.size() - off;
    }

    uint8_t u8(uint64_t off) const {
        need(off, 1);
        return d_[off];
    }
    uint16_t u16(uint64_t off) const {
        need(off, 2);
        return static_cast<uint16_t>(d_[off] | d_[off + 1] << 8);
    }
    uint32_t u32(uint64_t off) const {
        need(off, 4);
        return static_cast<uint32_t>(d_[off]) | static_cast<uint32_t>(d_[off + 1]) << 8 |
               static_cast<uint32_t>(d_[off + 2]) << 16 | static_cast<uint32_t>(d_[off + 3]) << 24;
    }
    uint64_t u64(uint64_t off) const {
        return static_cast<uint64_t>(u32(off)) | static_cast<uint64_t>(u32(off + 4)) << 32;
    }

    std::optional<uint32_t> try_u32(uint64_t off) const {
        if (!in_bounds(off, 4)) return std::nullopt;
        return u32(off);
    }
    std::optional<uint64_t> try_u64(uint64_t off) const {
        if (!in_bounds(off, 8)) return std::nullopt;
        return u64(off);
    }

    /// NUL-terminated ASCII string, bounded by max_len and the buffer end.
    std::optional<std::string> try_cstr(uint64_t off, size_t max_len) const {
        if (off >= d_.size()) return std::nullopt;
        std::string s;
        for (uint64_t i = off; i < d_.size() && s.size() < max_len; ++i) {
            if (d_[i] == 0) return s;
            s.push_back(static_cast<char>(d_[i]));
        }
        return std::nullopt; // ran off the end before a terminator
    }

private:
    void need(uint64_t off, uint64_t len) const {
        if (!in_bounds(off, len)) raise(Errc::malformed_pe, "truncated headers");
    }

    std::span<const uint8_t> d_;
};

std::optional<uint64_t> try_rva_to_offset(const PeFile& pe, uint64_t rva) {
    for (const SectionInfo& s : pe.sections) {
        uint64_t extent = std::max(s.virtual_size, s.size_of_raw_data);
        if (rva >= s.virtual_address && rva - s.virtual_address < extent) {
            return s.pointer_to_raw_data + (rva - s.virtual_address);
        }
    }
    if (rva < pe.optional_header.size_of_headers) return rva;
    return std::nullopt;
}

void parse_imports(const Reader& r, PeFile& pe, uint64_t import_rva) {
    ImportTable& it = pe.import_table;
    auto dir_off = try_rva_to_offset(pe, import_rva);
    if (!dir_off) {
        it.parse_warning = true;
        return;
    }
    const bool wide = pe.optional_header.magic == PeFormat::pe32plus;
    const uint64_t thunk_size = wide ? 8 : 4;
    const uint64_t ordinal_bit = wide ? 0x8000000000000000ULL : 0x80000000ULL;

    for (size_t i = 0; i < MAX_IMPORT_DESCRIPTORS; ++i) {
        uint64_t desc = *dir_off + i * 20;
        if (!r.in_bounds(desc, 20)) {
            it.parse_warning = true;
            return;
        }
        uint32_t original_first_thunk = *r.try_u32(desc);
        uint32_t name_rva = *r.try_u32(desc + 12);
        uint32_t first_thunk = *r.try_u32(desc + 16);
        if (original_first_thunk == 0 && name_rva == 0 && first_thunk == 0) break;

        if (name_rva != 0) {
            auto name_off = try_rva_to_offset(pe, name_rva);
            auto name = name_off ? r.try_cstr(*name_off, MAX_NAME_LEN) : std::nullopt;
            if (name && !name->empty()) {
                it.dll_names.push_back(*name);
            } else {
                it.parse_warning = true;
            }
        } else {
            it.parse_warning = true;
        }

        // Import directory entries: prefer the import name table, fall back
        // to the address table when the INT pointer is absent.
        uint32_t int_rva = original_first_thunk != 0 ? original_first_thunk : first_thunk;
        if (int_rva != 0) {
            auto int_off = try_rva_to_offset(pe, int_rva);
            if (!int_off) {
                it.parse_warning = true;
            } else {
                for (size_t t = 0; t < MAX_THUNKS_PER_DLL; ++t) {
                    uint64_t entry_off = *int_off + t * thunk_size;
                    uint64_t entry;
                    if (wide) {
                        auto v = r.try_u64(entry_off);
                        if (!v) {
                            it.parse_warning = true;
                            break;
                        }
                        entry = *v;
                    } else {
                        auto v = r.try_u32(entry_off);
                        if (!v) {
                            it.parse_warning = true;
                            break;
                        }
                        entry = *v;
                    }
                    if (entry == 0) break;
                    ++it.idt_function_count;
                    if ((entry & ordinal_bit) == 0) {
                        auto hint_off = try_rva_to_offset(pe, entry & 0x7FFFFFFFULL);
                        auto fname = hint_off ? r.try_cstr(*hint_off + 2, MAX_NAME_LEN)
                                              : std::nullopt;
                        if (fname && !fname->empty()) {
                            it.imported_function_names.push_back(*fname);
                        } else {
                            it.parse_warning = true;
                        }
                    }
                }
            }
        }

        // IAT slots are counted separately from the name table.
        if (first_thunk != 0) {
            auto iat_off = try_rva_to_offset(pe, first_thunk);
            if (!iat_off) {
                it.parse_warning = true;
            } else {
                for (size_t t = 0; t < MAX_THUNKS_PER_DLL; ++t) {
                    uint64_t entry_off = *iat_off + t * thunk_size;
                    uint64_t entry;
                    if (wide) {
                        auto v = r.try_u64(entry_off);
                        if (!v) {
                            it.parse_warning = true;
                            break;
                        }
                        entry = *v;
                    } else {
                        auto v = r.try_u32(entry_off);
                        if (!v) {
                            it.parse_warning = true;
                            break;
                        }
                        entry = *v;
                    }
                    if (entry == 0) break;
                    ++it.iat_entry_count;
                }
            }
        }
    }
}

// Counts leaf data entries in the resource tree. Offsets inside the tree are
// relative to the directory base; depth and a visited set defeat cycles.
void count_resource_leaves(const Reader& r, uint64_t base, uint32_t rel, int depth,
                           std::set<uint32_t>& visited, uint64_t& leaves) {
    if (depth > MAX_RESOURCE_DEPTH || leaves > MAX_RESOURCE_ENTRIES) return;
    if (!visited.insert(rel).second) return;
    uint64_t dir = base + rel;
    auto named = r.in_bounds(dir + 12, 2) ? std::optional<uint16_t>(r.u16(dir + 12)) : std::nullopt;
    auto ids = r.in_bounds(dir + 14, 2) ? std::optional<uint16_t>(r.u16(dir + 14)) : std::nullopt;
    if (!named || !ids) return;
    uint32_t n = static_cast<uint32_t>(*named) + *ids;
    if (n > MAX_RESOURCE_ENTRIES) return;
    for (uint32_t i = 0; i < n; ++i) {
        auto data = r.try_u32(dir + 16 + 8ULL * i + 4);
        if (!data) return;
        if (*data & 0x80000000) {
            count_resource_leaves(r, base, *data & 0x7FFFFFFF, depth + 1, visited, leaves);
        } else {
            ++leaves;
        }
    }
}

std::string trim_section_name(const uint8_t* p) {
    std::string name;
    for (size_t i = 0; i < 8 && p[i] != 0; ++i) name.push_back(static_cast<char>(p[i]));
    return name;
}

} // namespace

PeFile parse_pe(std::span<const uint8_t> bytes) {
    if (bytes.empty()) raise(Errc::malformed_pe, "empty input");
    Reader r(bytes);

    PeFile pe;
    pe.raw.assign(bytes.begin(), bytes.end());

    if (bytes.size() < 2 || r.u16(0) != DOS_MAGIC) raise(Errc::malformed_pe, "missing MZ magic");
    if (!r.in_bounds(0, 64)) raise(Errc::malformed_pe, "truncated dos header");
    pe.dos_header.e_magic = DOS_MAGIC;
    pe.dos_header.e_lfanew = r.u32(0x3C);

    uint64_t nt = pe.dos_header.e_lfanew;
    if (!r.in_bounds(nt, 4) || r.u32(nt) != PE_SIGNATURE) {
        raise(Errc::malformed_pe, "missing PE signature");
    }

    uint64_t coff = nt + 4;
    pe.coff_header.machine = r.u16(coff);
    pe.coff_header.number_of_sections = r.u16(coff + 2);
    pe.coff_header.time_date_stamp = r.u32(coff + 4);
    uint16_t size_of_optional = r.u16(coff + 16);
    pe.coff_header.characteristics = r.u16(coff + 18);

    uint64_t opt = coff + 20;
    if (size_of_optional < 2 || !r.in_bounds(opt, size_of_optional)) {
        raise(Errc::malformed_pe, "truncated optional header");
    }
    uint16_t magic = r.u16(opt);
    OptionalHeader& oh = pe.optional_header;
    uint64_t dirs_off;
    if (magic == OPT_MAGIC_PE32) {
        if (size_of_optional < 96) raise(Errc::malformed_pe, "truncated optional header");
        oh.magic = PeFormat::pe32;
        oh.size_of_code = r.u32(opt + 4);
        oh.size_of_initialized_data = r.u32(opt + 8);
        oh.size_of_uninitialized_data = r.u32(opt + 12);
        oh.address_of_entry_point = r.u32(opt + 16);
        oh.base_of_code = r.u32(opt + 20);
        oh.image_base = r.u32(opt + 28);
        oh.section_alignment = r.u32(opt + 32);
        oh.file_alignment = r.u32(opt + 36);
        oh.major_os_version = r.u16(opt + 40);
        oh.minor_os_version = r.u16(opt + 42);
        oh.size_of_image = r.u32(opt + 56);
        oh.size_of_headers = r.u32(opt + 60);
        oh.checksum = r.u32(opt + 64);
        oh.dll_characteristics = r.u16(opt + 70);
        oh.size_of_stack_reserve = r.u32(opt + 72);
        oh.size_of_stack_commit = r.u32(opt + 76);
        oh.number_of_data_directories = r.u32(opt + 92);
        dirs_off = opt + 96;
    } else if (magic == OPT_MAGIC_PE32PLUS) {
        if (size_of_optional < 112) raise(Errc::malformed_pe, "truncated optional header");
        oh.magic = PeFormat::pe32plus;
        oh.size_of_code = r.u32(opt + 4);
        oh.size_of_initialized_data = r.u32(opt + 8);
        oh.size_of_uninitialized_data = r.u32(opt + 12);
        oh.address_of_entry_point = r.u32(opt + 16);
        oh.base_of_code = r.u32(opt + 20);
        oh.image_base = r.u64(opt + 24);
        oh.section_alignment = r.u32(opt + 32);
        oh.file_alignment = r.u32(opt + 36);
        oh.major_os_version = r.u16(opt + 40);
        oh.minor_os_version = r.u16(opt + 42);
        oh.size_of_image = r.u32(opt + 56);
        oh.size_of_headers = r.u32(opt + 60);
        oh.checksum = r.u32(opt + 64);
        oh.dll_characteristics = r.u16(opt + 70);
        oh.size_of_stack_reserve = r.u64(opt + 72);
        oh.size_of_stack_commit = r.u64(opt + 80);
        oh.number_of_data_directories = r.u32(opt + 108);
        dirs_off = opt + 112;
    } else {
        raise(Errc::malformed_pe, "unknown optional header magic");
    }

    uint32_t ndirs = std::min<uint32_t>(oh.number_of_data_directories, 16);
    struct Dir {
        uint32_t rva = 0;
        uint32_t size = 0;
    };
    Dir dirs[16];
    for (uint32_t i = 0; i < ndirs; ++i) {
        if (!r.in_bounds(dirs_off + 8ULL * i, 8)) {
            raise(Errc::malformed_pe, "truncated data directories");
        }
        dirs[i].rva = r.u32(dirs_off + 8ULL * i);
        dirs[i].size = r.u32(dirs_off + 8ULL * i + 4);
    }

    uint64_t sect_off = opt + size_of_optional;
    uint64_t sect_bytes = 40ULL * pe.coff_header.number_of_sections;
    if (!r.in_bounds(sect_off, sect_bytes)) raise(Errc::malformed_pe, "section table overrun");
    pe.sections.reserve(pe.coff_header.number_of_sections);
    for (uint32_t i = 0; i < pe.coff_header.number_of_sections; ++i) {
        uint64_t s = sect_off + 40ULL * i;
        SectionInfo info;
        info.name = trim_section_name(bytes.data() + s);
        info.virtual_size = r.u32(s + 8);
        info.virtual_address = r.u32(s + 12);
        info.size_of_raw_data = r.u32(s + 16);
        info.pointer_to_raw_data = r.u32(s + 20);
        info.characteristics = r.u32(s + 36);
        if (info.size_of_raw_data > 0 &&
            !r.in_bounds(info.pointer_to_raw_data, info.size_of_raw_data)) {
            raise(Errc::malformed_pe, "section raw range out of bounds");
        }
        pe.sections.push_back(std::move(info));
    }

    if (ndirs > 1 && dirs[1].rva != 0 && dirs[1].size != 0) {
        parse_imports(r, pe, dirs[1].rva);
    }
    if (ndirs > 2 && dirs[2].rva != 0 && dirs[2].size != 0) {
        auto base = try_rva_to_offset(pe, dirs[2].rva);
        if (base) {
            std::set<uint32_t> visited;
            count_resource_leaves(r, *base, 0, 0, visited, pe.resource_count);
        }
    }
    if (ndirs > 6 && dirs[6].rva != 0 && dirs[6].size != 0) {
        pe.debug_directory_present = true;
    }

    return pe;
}

uint64_t rva_to_offset(const PeFile& pe, uint64_t rva) {
    auto off = try_rva_to_offset(pe, rva);
    if (!off) raise(Errc::unmapped_rva, "no section covers rva");
    return *off;
}

EntryBytes entry_bytes(const PeFile& pe, size_t n) {
    if (n < 1) raise(Errc::bad_argument, "entry_bytes: n must be >= 1");
    uint64_t rva = pe.optional_header.address_of_entry_point;
    uint64_t off = rva_to_offset(pe, rva);

    // Readable extent: up to the end of the entry section's raw data, or the
    // header region when the entry maps below the sections.
    uint64_t limit = pe.raw.size();
    bool in_section = false;
    for (const SectionInfo& s : pe.sections) {
        uint64_t extent = std::max(s.virtual_size, s.size_of_raw_data);
        if (rva >= s.virtual_address && rva - s.virtual_address < extent) {
            limit = std::min<uint64_t>(limit, s.pointer_to_raw_data + s.size_of_raw_data);
            in_section = true;
            break;
        }
    }
    if (!in_section) {
        limit = std::min<uint64_t>(limit, pe.optional_header.size_of_headers);
    }

    EntryBytes out;
    out.bytes.assign(n, 0);
    uint64_t avail = off < limit ? limit - off : 0;
    size_t take = static_cast<size_t>(std::min<uint64_t>(n, avail));
    std::copy_n(pe.raw.begin() + static_cast<ptrdiff_t>(off), take, out.bytes.begin());
    out.short_read = take < n;
    out.read_count = take;
    return out;
}

} // namespace packdet::pe
