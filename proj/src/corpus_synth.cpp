#include "packdet/corpus.hpp"

#include "packdet/error.hpp"
#include "packdet/rng.hpp"

#include <algorithm>
#include <cstring>

namespace packdet::corpus {

namespace {

constexpr uint32_t NT_OFFSET = 0x80;

uint64_t align_up(uint64_t v, uint64_t a) { return a ? (v + a - 1) / a * a : v; }

void put_u16(std::vector<uint8_t>& b, uint64_t off, uint16_t v) {
    b[off] = static_cast<uint8_t>(v);
    b[off + 1] = static_cast<uint8_t>(v >> 8);
}
void put_u32(std::vector<uint8_t>& b, uint64_t off, uint32_t v) {
    for (int i = 0; i < 4; ++i) b[off + static_cast<uint64_t>(i)] = static_cast<uint8_t>(v >> (8 * i));
}
void put_u64(std::vector<uint8_t>& b, uint64_t off, uint64_t v) {
    for (int i = 0; i < 8; ++i) b[off + static_cast<uint64_t>(i)] = static_cast<uint8_t>(v >> (8 * i));
}

// Skewed byte alphabet approximating prose; entropy a little above 4 bits.
const std::array<uint8_t, 256>& text_table() {
    static const std::array<uint8_t, 256> table = [] {
        std::array<uint8_t, 256> t{};
        const char* freq =
            "          eeeeeeeeeeeetttttttttaaaaaaaaooooooooiiiiiiinnnnnnnsssssshhhhhh"
            "rrrrrrddddllllccccuuuummmwwffggyyppbbvkjxqz"
            "EETTAAOINSHRDLU0123456789.,;:!?'\"()-_=+*/\\<>[]{}";
        size_t len = std::strlen(freq);
        for (size_t i = 0; i < 256; ++i) t[i] = static_cast<uint8_t>(freq[i % len]);
        return t;
    }();
    return table;
}

void fill_region(std::vector<uint8_t>& buf, uint64_t off, uint64_t len, const SectionFill& fill,
                 Rng& rng) {
    switch (fill.kind) {
        case SectionFill::Kind::zeros:
            std::fill_n(buf.begin() + static_cast<ptrdiff_t>(off), len, 0);
            break;
        case SectionFill::Kind::text_like:
            for (uint64_t i = 0; i < len; ++i) {
                buf[off + i] = text_table()[rng.below(256)];
            }
            break;
        case SectionFill::Kind::random_bytes:
            for (uint64_t i = 0; i < len; ++i) {
                buf[off + i] = static_cast<uint8_t>(rng.below(256));
            }
            break;
        case SectionFill::Kind::mixed:
            for (uint64_t i = 0; i < len; ++i) {
                buf[off + i] = rng.unit() < fill.mix_ratio
                                   ? static_cast<uint8_t>(rng.below(256))
                                   : text_table()[rng.below(256)];
            }
            break;
    }
}

struct ImportBlock {
    std::vector<uint8_t> bytes;
    uint32_t size = 0;
};

// Import directory image: descriptor array, name tables, address tables,
// hint/name strings, dll names. All offsets relative to block start.
ImportBlock build_imports(const SynthProfile& p, uint64_t block_rva) {
    const bool wide = p.format == pe::PeFormat::pe32plus;
    const uint32_t thunk = wide ? 8 : 4;
    const size_t ndll = p.imports.size();

    uint32_t desc_bytes = static_cast<uint32_t>((ndll + 1) * 20);
    uint32_t off_int = desc_bytes;
    uint32_t total_thunks = 0;
    for (size_t d = 0; d < ndll; ++d) {
        total_thunks += static_cast<uint32_t>(p.imports[d].second.size()) + 1;
        if (d == 0) total_thunks += p.ordinal_imports;
    }
    uint32_t off_iat = off_int + total_thunks * thunk;
    uint32_t off_names = off_iat + total_thunks * thunk;

    ImportBlock block;
    std::vector<uint8_t>& b = block.bytes;
    b.assign(off_names, 0);

    std::vector<uint32_t> name_offsets; // per function, relative
    for (const auto& [dll, funcs] : p.imports) {
        for (const std::string& f : funcs) {
            name_offsets.push_back(static_cast<uint32_t>(b.size()));
            b.push_back(0); // hint
            b.push_back(0);
            b.insert(b.end(), f.begin(), f.end());
            b.push_back(0);
        }
    }
    std::vector<uint32_t> dll_name_offsets;
    for (const auto& [dll, funcs] : p.imports) {
        dll_name_offsets.push_back(static_cast<uint32_t>(b.size()));
        b.insert(b.end(), dll.begin(), dll.end());
        b.push_back(0);
    }
    block.size = static_cast<uint32_t>(b.size());

    const uint64_t ordinal_bit = wide ? 0x8000000000000000ULL : 0x80000000ULL;
    uint32_t int_cursor = off_int, iat_cursor = off_iat;
    size_t func_index = 0;
    for (size_t d = 0; d < ndll; ++d) {
        const auto& funcs = p.imports[d].second;
        uint64_t desc = d * 20;
        put_u32(b, desc, static_cast<uint32_t>(block_rva + int_cursor));
        put_u32(b, desc + 12, static_cast<uint32_t>(block_rva + dll_name_offsets[d]));
        put_u32(b, desc + 16, static_cast<uint32_t>(block_rva + iat_cursor));
        size_t slots = funcs.size() + (d == 0 ? p.ordinal_imports : 0);
        for (size_t f = 0; f < slots; ++f) {
            uint64_t entry = f < funcs.size()
                                 ? block_rva + name_offsets[func_index + f]
                                 : (ordinal_bit | (f - funcs.size() + 1));
            if (wide) {
                put_u64(b, int_cursor + f * 8, entry);
                put_u64(b, iat_cursor + f * 8, entry);
            } else {
                put_u32(b, int_cursor + f * 4, static_cast<uint32_t>(entry));
                put_u32(b, iat_cursor + f * 4, static_cast<uint32_t>(entry));
            }
        }
        func_index += funcs.size();
        int_cursor += static_cast<uint32_t>(slots + 1) * thunk;
        iat_cursor += static_cast<uint32_t>(slots + 1) * thunk;
    }
    return block;
}

// Resource directory image: one root with `count` id entries, each pointing
// at a data entry. Offsets relative to block start.
std::vector<uint8_t> build_resources(uint32_t count, uint64_t section_va) {
    uint32_t entries_off = 16;
    uint32_t data_off = entries_off + count * 8;
    std::vector<uint8_t> b(data_off + count * 16, 0);
    put_u16(b, 14, static_cast<uint16_t>(count)); // id entries
    for (uint32_t i = 0; i < count; ++i) {
        put_u32(b, entries_off + i * 8, i + 1);
        put_u32(b, entries_off + i * 8 + 4, data_off + i * 16); // high bit clear: data entry
        put_u32(b, data_off + i * 16, static_cast<uint32_t>(section_va)); // payload rva
        put_u32(b, data_off + i * 16 + 4, 16);                            // payload size
    }
    return b;
}

} // namespace

SynthPe synth_pe(const SynthProfile& p, uint64_t seed) {
    if (p.sections.empty()) raise(Errc::bad_profile, "profile needs at least one section");
    if (p.entry_section < 0 || static_cast<size_t>(p.entry_section) >= p.sections.size()) {
        raise(Errc::bad_profile, "entry section index out of range");
    }
    if (p.file_alignment == 0 || p.section_alignment == 0) {
        raise(Errc::bad_profile, "alignments must be non-zero");
    }
    for (const SectionPlan& s : p.sections) {
        if (s.name.size() > 8) raise(Errc::bad_profile, "section name over 8 bytes: " + s.name);
    }
    const bool wide = p.format == pe::PeFormat::pe32plus;
    const uint32_t opt_size = wide ? 0xF0 : 0xE0;
    const size_t nsec = p.sections.size();

    uint64_t headers_end = NT_OFFSET + 4 + 20 + opt_size + 40ULL * nsec;
    uint64_t size_of_headers = align_up(headers_end, p.file_alignment);
    if (p.debug_directory && headers_end + 0x40 > size_of_headers) {
        size_of_headers += p.file_alignment; // room for the debug entry
    }

    // lay out sections
    struct Placed {
        uint64_t va, raw_off, raw_size, virtual_size;
    };
    std::vector<Placed> placed;
    uint64_t va_cursor = align_up(std::max<uint64_t>(size_of_headers, 1), p.section_alignment);
    uint64_t raw_cursor = size_of_headers;
    for (const SectionPlan& s : p.sections) {
        Placed pl;
        pl.va = va_cursor;
        pl.raw_size = align_up(s.raw_size, p.file_alignment);
        pl.virtual_size = s.virtual_size ? s.virtual_size : pl.raw_size;
        pl.raw_off = pl.raw_size ? raw_cursor : 0;
        raw_cursor += pl.raw_size;
        va_cursor += align_up(std::max(pl.virtual_size, pl.raw_size), p.section_alignment);
        if (va_cursor == pl.va) va_cursor += p.section_alignment;
        placed.push_back(pl);
    }
    uint64_t size_of_image = va_cursor;

    const Placed& entry_sec = placed[static_cast<size_t>(p.entry_section)];
    if (entry_sec.raw_size == 0 || p.entry_offset + 64 > entry_sec.raw_size) {
        raise(Errc::bad_profile, "entry section leaves no room for the entry stub");
    }

    SynthPe out;
    std::vector<uint8_t>& b = out.bytes;
    b.assign(raw_cursor, 0);
    Rng rng(seed);

    // section contents
    for (size_t i = 0; i < nsec; ++i) {
        if (placed[i].raw_size > 0) {
            fill_region(b, placed[i].raw_off, placed[i].raw_size, p.sections[i].fill, rng);
        }
    }

    // dos header + stub filler
    b[0] = 'M';
    b[1] = 'Z';
    put_u32(b, 0x3C, NT_OFFSET);
    {
        const char* msg = "This program cannot be run in DOS mode.";
        size_t len = std::strlen(msg);
        std::copy_n(msg, len, b.begin() + 0x4E);
    }

    // PE signature + coff
    put_u32(b, NT_OFFSET, 0x00004550);
    uint64_t coff = NT_OFFSET + 4;
    put_u16(b, coff, wide ? 0x8664 : 0x014C);
    put_u16(b, coff + 2, static_cast<uint16_t>(nsec));
    put_u32(b, coff + 4, static_cast<uint32_t>(p.timestamp));
    put_u16(b, coff + 16, static_cast<uint16_t>(opt_size));
    put_u16(b, coff + 18, wide ? 0x0022 : 0x0102);

    // optional header
    uint64_t opt = coff + 20;
    uint64_t entry_rva = entry_sec.va + p.entry_offset;
    uint64_t code_size = 0, init_size = 0, uninit_size = 0;
    uint64_t base_of_code = 0;
    for (size_t i = 0; i < nsec; ++i) {
        uint32_t ch = p.sections[i].characteristics;
        if (ch & pe::SCN_CNT_CODE) {
            code_size += placed[i].raw_size;
            if (base_of_code == 0) base_of_code = placed[i].va;
        }
        if (ch & pe::SCN_CNT_INITIALIZED_DATA) init_size += placed[i].raw_size;
        if (ch & pe::SCN_CNT_UNINITIALIZED_DATA) uninit_size += placed[i].virtual_size;
    }
    put_u16(b, opt, wide ? 0x20B : 0x10B);
    b[opt + 2] = 14; // linker versions, cosmetic
    put_u32(b, opt + 4, static_cast<uint32_t>(code_size));
    put_u32(b, opt + 8, static_cast<uint32_t>(init_size));
    put_u32(b, opt + 12, static_cast<uint32_t>(uninit_size));
    put_u32(b, opt + 16, static_cast<uint32_t>(entry_rva));
    put_u32(b, opt + 20, static_cast<uint32_t>(base_of_code));
    if (wide) {
        put_u64(b, opt + 24, 0x140000000ULL);
    } else {
        put_u32(b, opt + 28, 0x400000);
    }
    put_u32(b, opt + 32, p.section_alignment);
    put_u32(b, opt + 36, p.file_alignment);
    put_u16(b, opt + 40, p.os_major);
    put_u16(b, opt + 42, p.os_minor);
    put_u16(b, opt + 48, p.os_major); // subsystem version mirrors os version
    put_u16(b, opt + 50, p.os_minor);
    put_u32(b, opt + 56, static_cast<uint32_t>(size_of_image));
    put_u32(b, opt + 60, static_cast<uint32_t>(size_of_headers));
    put_u32(b, opt + 64, p.checksum);
    put_u16(b, opt + 68, 3); // console subsystem
    put_u16(b, opt + 70, p.dll_characteristics);
    if (wide) {
        put_u64(b, opt + 72, p.stack_reserve);
        put_u64(b, opt + 80, p.stack_commit);
        put_u64(b, opt + 88, 0x100000); // heap reserve
        put_u64(b, opt + 96, 0x1000);
        put_u32(b, opt + 108, 16);
    } else {
        put_u32(b, opt + 72, static_cast<uint32_t>(p.stack_reserve));
        put_u32(b, opt + 76, static_cast<uint32_t>(p.stack_commit));
        put_u32(b, opt + 80, 0x100000);
        put_u32(b, opt + 84, 0x1000);
        put_u32(b, opt + 92, 16);
    }
    uint64_t dirs = opt + (wide ? 112 : 96);

    // section table
    uint64_t sect = opt + opt_size;
    for (size_t i = 0; i < nsec; ++i) {
        uint64_t s = sect + 40 * i;
        const std::string& name = p.sections[i].name;
        std::copy(name.begin(), name.end(), b.begin() + static_cast<ptrdiff_t>(s));
        put_u32(b, s + 8, static_cast<uint32_t>(placed[i].virtual_size));
        put_u32(b, s + 12, static_cast<uint32_t>(placed[i].va));
        put_u32(b, s + 16, static_cast<uint32_t>(placed[i].raw_size));
        put_u32(b, s + 20, static_cast<uint32_t>(placed[i].raw_off));
        put_u32(b, s + 36, p.sections[i].characteristics);
    }

    // imports
    if (p.import_section >= 0 && !p.imports.empty()) {
        if (static_cast<size_t>(p.import_section) >= nsec) {
            raise(Errc::bad_profile, "import section index out of range");
        }
        const Placed& sec = placed[static_cast<size_t>(p.import_section)];
        ImportBlock block = build_imports(p, sec.va);
        if (block.size > sec.raw_size) {
            raise(Errc::bad_profile, "import table does not fit its section");
        }
        std::copy(block.bytes.begin(), block.bytes.end(),
                  b.begin() + static_cast<ptrdiff_t>(sec.raw_off));
        put_u32(b, dirs + 8, static_cast<uint32_t>(sec.va));
        put_u32(b, dirs + 12, static_cast<uint32_t>((p.imports.size() + 1) * 20));
    }

    // resources
    if (p.resource_section >= 0 && p.resource_count > 0) {
        if (static_cast<size_t>(p.resource_section) >= nsec) {
            raise(Errc::bad_profile, "resource section index out of range");
        }
        const Placed& sec = placed[static_cast<size_t>(p.resource_section)];
        std::vector<uint8_t> block = build_resources(p.resource_count, sec.va);
        // resources sit in the upper half so imports may share the section
        uint64_t off = sec.raw_size / 2;
        if (off + block.size() > sec.raw_size) {
            raise(Errc::bad_profile, "resource table does not fit its section");
        }
        std::copy(block.begin(), block.end(),
                  b.begin() + static_cast<ptrdiff_t>(sec.raw_off + off));
        put_u32(b, dirs + 16, static_cast<uint32_t>(sec.va + off));
        put_u32(b, dirs + 20, static_cast<uint32_t>(block.size()));
    }

    // debug directory entry in the header padding
    if (p.debug_directory) {
        uint64_t off = headers_end + 8;
        put_u32(b, dirs + 48, static_cast<uint32_t>(off));
        put_u32(b, dirs + 52, 28);
    }

    // entry stub
    uint64_t entry_off = entry_sec.raw_off + p.entry_offset;
    for (size_t i = 0; i < p.entry_stub.size() && p.entry_offset + i < entry_sec.raw_size; ++i) {
        b[entry_off + i] = p.entry_stub[i];
    }

    out.layout.entry_rva = entry_rva;
    out.layout.entry_file_offset = entry_off;
    for (const Placed& pl : placed) out.layout.sections.push_back({pl.va, pl.raw_off});
    return out;
}

SynthProfile SynthProfile::plain_default() {
    SynthProfile p;
    p.class_hint = ClassHint::plain;
    p.sections = {
        {".text", 0x60000020, 8192, 0, {SectionFill::Kind::text_like, 0}},
        {".rdata", 0x40000040, 2048, 0, {SectionFill::Kind::text_like, 0}},
        {".data", 0xC0000040, 4096, 0, {SectionFill::Kind::text_like, 0}},
        {".rsrc", 0x40000040, 1024, 0, {SectionFill::Kind::text_like, 0}},
    };
    p.entry_section = 0;
    p.entry_offset = 0x100;
    p.entry_stub = {0x55, 0x8B, 0xEC, 0x83, 0xEC, 0x40, 0x53, 0x56};
    p.import_section = 1;
    p.imports = {
        {"KERNEL32.dll",
         {"ExitProcess", "GetStartupInfoA", "GetStdHandle", "GetCommandLineA", "WriteFile",
          "ReadFile", "CloseHandle", "GetLastError", "HeapAlloc", "HeapFree"}},
        {"USER32.dll", {"MessageBoxA", "LoadStringA"}},
        {"ADVAPI32.dll", {"RegOpenKeyExA", "RegQueryValueExA", "RegCloseKey"}},
    };
    p.resource_section = 3;
    p.resource_count = 3;
    p.debug_directory = true;
    p.dll_characteristics = pe::DLLCH_DYNAMIC_BASE | pe::DLLCH_NX_COMPAT | pe::DLLCH_TS_AWARE;
    p.os_major = 6;
    p.checksum = 0x12345;
    return p;
}

SynthProfile SynthProfile::packed_default() {
    SynthProfile p;
    p.class_hint = ClassHint::packed;
    p.sections = {
        {"UPX0", 0xE0000080, 0, 32768, {SectionFill::Kind::zeros, 0}},
        {"UPX1", 0xE0000060, 16384, 20480, {SectionFill::Kind::random_bytes, 0}},
        {".rsrc", 0x40000040, 1024, 0, {SectionFill::Kind::text_like, 0}},
    };
    p.entry_section = 1;
    p.entry_offset = 0x400;
    p.entry_stub = {0x60, 0xBE, 0x00, 0x90, 0x44, 0x00, 0x8D, 0xBE};
    p.import_section = 2;
    p.imports = {
        {"KERNEL32.DLL", {"LoadLibraryA", "GetProcAddress", "VirtualProtect", "ExitProcess"}},
    };
    p.resource_section = 2;
    p.resource_count = 1;
    p.debug_directory = false;
    p.dll_characteristics = 0;
    p.os_major = 4;
    p.checksum = 0;
    return p;
}

} // namespace packdet::corpus
