#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace packdet::pe {

// Section characteristic flags (subset used by the feature set).
inline constexpr uint32_t SCN_CNT_CODE = 0x00000020;
inline constexpr uint32_t SCN_CNT_INITIALIZED_DATA = 0x00000040;
inline constexpr uint32_t SCN_CNT_UNINITIALIZED_DATA = 0x00000080;
inline constexpr uint32_t SCN_MEM_EXECUTE = 0x20000000;
inline constexpr uint32_t SCN_MEM_READ = 0x40000000;
inline constexpr uint32_t SCN_MEM_WRITE = 0x80000000;

// DLL-characteristics bits, in feature order 1..8.
inline constexpr uint16_t DLLCH_DYNAMIC_BASE = 0x0040;
inline constexpr uint16_t DLLCH_FORCE_INTEGRITY = 0x0080;
inline constexpr uint16_t DLLCH_NX_COMPAT = 0x0100;
inline constexpr uint16_t DLLCH_NO_ISOLATION = 0x0200;
inline constexpr uint16_t DLLCH_NO_SEH = 0x0400;
inline constexpr uint16_t DLLCH_NO_BIND = 0x0800;
inline constexpr uint16_t DLLCH_WDM_DRIVER = 0x2000;
inline constexpr uint16_t DLLCH_TS_AWARE = 0x8000;

enum class PeFormat { pe32, pe32plus };

struct SectionInfo {
    std::string name; // raw 8-byte field, NUL-trimmed
    uint64_t virtual_size = 0;
    uint64_t virtual_address = 0;
    uint64_t size_of_raw_data = 0;
    uint64_t pointer_to_raw_data = 0;
    uint32_t characteristics = 0;

    bool has(uint32_t flag) const { return (characteristics & flag) != 0; }
    bool readable() const { return has(SCN_MEM_READ); }
    bool writable() const { return has(SCN_MEM_WRITE); }
    bool executable() const { return has(SCN_MEM_EXECUTE); }
};

struct DosHeader {
    uint16_t e_magic = 0;
    uint32_t e_lfanew = 0;
};

struct CoffHeader {
    uint16_t machine = 0;
    uint16_t number_of_sections = 0;
    uint32_t time_date_stamp = 0;
    uint16_t characteristics = 0;
};

/// Optional-header fields used downstream. PE32 and PE32+ widths are both
/// normalized to 64-bit values.
struct OptionalHeader {
    PeFormat magic = PeFormat::pe32;
    uint32_t checksum = 0;
    uint64_t image_base = 0;
    uint64_t base_of_code = 0;
    uint16_t major_os_version = 0;
    uint16_t minor_os_version = 0;
    uint64_t size_of_image = 0;
    uint64_t size_of_code = 0;
    uint64_t size_of_headers = 0;
    uint64_t size_of_initialized_data = 0;
    uint64_t size_of_uninitialized_data = 0;
    uint64_t size_of_stack_reserve = 0;
    uint64_t size_of_stack_commit = 0;
    uint64_t section_alignment = 0;
    uint64_t file_alignment = 0;
    uint16_t dll_characteristics = 0;
    uint64_t address_of_entry_point = 0;
    uint32_t number_of_data_directories = 0;
};

struct ImportTable {
    std::vector<std::string> dll_names;
    /// Function names found in the import directory (ordinal imports are
    /// counted in idt_function_count but carry no name).
    std::vector<std::string> imported_function_names;
    uint64_t idt_function_count = 0;
    uint64_t iat_entry_count = 0;
    /// Set when the import directory was damaged and parsing degraded to a
    /// partial result instead of failing the whole file.
    bool parse_warning = false;
};

struct PeFile {
    DosHeader dos_header;
    CoffHeader coff_header;
    OptionalHeader optional_header;
    std::vector<SectionInfo> sections;
    ImportTable import_table;
    uint64_t resource_count = 0;
    bool debug_directory_present = false;
    std::vector<uint8_t> raw;
};

/// Parses a PE32/PE32+ image. Directories that are absent yield empty
/// lists/zero counts; a damaged import or resource directory degrades to a
/// partial result with import_table.parse_warning set. Structural problems
/// (bad magics, truncated headers, section raw ranges outside the file)
/// raise Error{malformed_pe}. Never reads outside `bytes`.
PeFile parse_pe(std::span<const uint8_t> bytes);

/// Maps an RVA to a file offset: inside a section's virtual range
/// [va, va + max(virtual_size, raw_size)) it is pointer_to_raw_data plus the
/// delta; an RVA below size_of_headers maps to itself. Raises
/// Error{unmapped_rva} otherwise.
uint64_t rva_to_offset(const PeFile& pe, uint64_t rva);

struct EntryBytes {
    std::vector<uint8_t> bytes;
    bool short_read = false;
    size_t read_count = 0; // bytes actually read before zero padding
};

/// The n bytes at the entry point. Reads are limited to the entry section's
/// raw data (or the header region when the entry maps there); a short read
/// zero-pads the tail and sets short_read. Raises Error{unmapped_rva} when
/// the entry RVA maps nowhere.
EntryBytes entry_bytes(const PeFile& pe, size_t n);

} // namespace packdet::pe
