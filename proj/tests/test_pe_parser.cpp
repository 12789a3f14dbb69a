#include "packdet/corpus.hpp"
#include "packdet/error.hpp"
#include "packdet/features.hpp"
#include "packdet/pe_parser.hpp"
#include "packdet/rng.hpp"

#include <doctest.h>

#include <algorithm>

using namespace packdet;

namespace {

pe::PeFile parse_profile(const corpus::SynthProfile& profile, uint64_t seed) {
    return pe::parse_pe(corpus::synth_pe(profile, seed).bytes);
}

} // namespace

TEST_SUITE("pe_parser") {

TEST_CASE("default profiles parse with the planned section counts") {
    auto plain = corpus::SynthProfile::plain_default();
    pe::PeFile pf = parse_profile(plain, 1);
    CHECK(pf.coff_header.number_of_sections == plain.sections.size());
    CHECK(pf.sections.size() == plain.sections.size());
    CHECK(pf.sections[0].name == ".text");
    CHECK(pf.optional_header.size_of_stack_reserve == 1048576);
    CHECK(pf.debug_directory_present);
    CHECK(pf.resource_count == 3);

    auto packed = corpus::SynthProfile::packed_default();
    pe::PeFile pk = parse_profile(packed, 2);
    CHECK(pk.sections.size() == packed.sections.size());
    CHECK(pk.sections[0].name == "UPX0");
    CHECK_FALSE(pk.debug_directory_present);
}

TEST_CASE("degenerate two-byte input is a truncated header") {
    std::vector<uint8_t> mz = {'M', 'Z'};
    CHECK_THROWS_WITH_AS(pe::parse_pe(mz), doctest::Contains("truncated"), Error);
    try {
        pe::parse_pe(mz);
    } catch (const Error& e) {
        CHECK(e.code() == Errc::malformed_pe);
    }
}

TEST_CASE("bad magics are rejected") {
    std::vector<uint8_t> junk(256, 0x41);
    CHECK_THROWS_AS(pe::parse_pe(junk), Error);

    auto bytes = corpus::synth_pe(corpus::SynthProfile::plain_default(), 3).bytes;
    bytes[0x80] = 'X'; // PE signature
    CHECK_THROWS_AS(pe::parse_pe(bytes), Error);
}

TEST_CASE("imports carry the planned function names") {
    pe::PeFile pk = parse_profile(corpus::SynthProfile::packed_default(), 4);
    const auto& names = pk.import_table.imported_function_names;
    CHECK(std::find(names.begin(), names.end(), "GetProcAddress") != names.end());
    CHECK(std::find(names.begin(), names.end(), "LoadLibraryA") != names.end());
    CHECK(pk.import_table.dll_names == std::vector<std::string>{"KERNEL32.DLL"});
    CHECK(pk.import_table.idt_function_count == 4);
    CHECK(pk.import_table.iat_entry_count == 4);
    CHECK_FALSE(pk.import_table.parse_warning);
}

TEST_CASE("pe32+ images parse with normalized widths") {
    auto profile = corpus::SynthProfile::packed_default();
    profile.format = pe::PeFormat::pe32plus;
    pe::PeFile pf = parse_profile(profile, 5);
    CHECK(pf.optional_header.magic == pe::PeFormat::pe32plus);
    CHECK(pf.optional_header.image_base == 0x140000000ULL);
    CHECK(pf.optional_header.size_of_stack_reserve == 1048576);
    CHECK(pf.import_table.idt_function_count == 4);
}

TEST_CASE("rva_to_offset arithmetic") {
    pe::PeFile pf;
    pf.optional_header.size_of_headers = 0x400;
    pe::SectionInfo s;
    s.virtual_address = 0x1000;
    s.virtual_size = 0x1000;
    s.size_of_raw_data = 0x1000;
    s.pointer_to_raw_data = 0x400;
    pf.sections.push_back(s);

    CHECK(pe::rva_to_offset(pf, 0x1010) == 0x410);
    CHECK(pe::rva_to_offset(pf, 0x40) == 0x40); // header identity mapping
    CHECK_THROWS_AS(pe::rva_to_offset(pf, 0xFFFFFF), Error);
    try {
        pe::rva_to_offset(pf, 0xFFFFFF);
    } catch (const Error& e) {
        CHECK(e.code() == Errc::unmapped_rva);
    }
}

TEST_CASE("rva_to_offset is injective inside a section and matches the layout") {
    corpus::SynthPe spe = corpus::synth_pe(corpus::SynthProfile::plain_default(), 6);
    pe::PeFile pf = pe::parse_pe(spe.bytes);
    CHECK(pe::rva_to_offset(pf, spe.layout.entry_rva) == spe.layout.entry_file_offset);
    for (size_t i = 0; i < pf.sections.size(); ++i) {
        const pe::SectionInfo& s = pf.sections[i];
        if (s.size_of_raw_data == 0) continue;
        CHECK(pe::rva_to_offset(pf, s.virtual_address) == spe.layout.sections[i].second);
        CHECK(pe::rva_to_offset(pf, s.virtual_address + 1) ==
              pe::rva_to_offset(pf, s.virtual_address) + 1);
    }
}

TEST_CASE("entry_bytes returns the planted stub") {
    auto profile = corpus::SynthProfile::plain_default();
    profile.entry_stub = {0x90, 0x90, 0xC3};
    pe::PeFile pf = parse_profile(profile, 7);
    pe::EntryBytes eb = pe::entry_bytes(pf, 3);
    CHECK(eb.bytes == std::vector<uint8_t>{0x90, 0x90, 0xC3});
    CHECK_FALSE(eb.short_read);

    pe::EntryBytes full = pe::entry_bytes(pf, 64);
    CHECK(full.bytes.size() == 64);
    CHECK_FALSE(full.short_read);
}

TEST_CASE("entry_bytes zero-pads a short read") {
    pe::PeFile pf;
    pf.raw.assign(0x500, 0);
    pf.raw[0x4FF] = 0xAB;
    pf.optional_header.size_of_headers = 0x400;
    pf.optional_header.address_of_entry_point = 0x10FF;
    pe::SectionInfo s;
    s.virtual_address = 0x1000;
    s.virtual_size = 0x200;
    s.size_of_raw_data = 0x100;
    s.pointer_to_raw_data = 0x400;
    pf.sections.push_back(s);

    pe::EntryBytes eb = pe::entry_bytes(pf, 64);
    CHECK(eb.short_read);
    CHECK(eb.read_count == 1);
    CHECK(eb.bytes[0] == 0xAB);
    for (size_t i = 1; i < 64; ++i) CHECK(eb.bytes[i] == 0);

    // an entry in the virtual-only tail reads nothing
    pf.optional_header.address_of_entry_point = 0x1150;
    pe::EntryBytes tail = pe::entry_bytes(pf, 8);
    CHECK(tail.short_read);
    CHECK(tail.read_count == 0);
}

TEST_CASE("section raw ranges outside the file fail the parse") {
    auto bytes = corpus::synth_pe(corpus::SynthProfile::plain_default(), 8).bytes;
    // SizeOfRawData of section 0 (section table after the PE32 optional header)
    uint64_t section_table = 0x80 + 4 + 20 + 0xE0;
    uint64_t raw_size_off = section_table + 16;
    bytes[raw_size_off + 2] = 0x7F; // inflate to ~2 GB
    bytes[raw_size_off + 3] = 0x7F;
    CHECK_THROWS_WITH_AS(pe::parse_pe(bytes), doctest::Contains("raw range"), Error);
}

TEST_CASE("parsing is total over the generator output space") {
    for (uint64_t seed = 0; seed < 25; ++seed) {
        for (auto scenario_name : {"default", "hard"}) {
            corpus::Scenario sc = corpus::make_scenario(scenario_name, 4, seed);
            for (const corpus::CorpusSample& s : sc.samples) {
                corpus::SynthPe spe = corpus::synth_pe(s.profile, s.seed);
                CHECK_NOTHROW(pe::parse_pe(spe.bytes));
            }
        }
    }
}

TEST_CASE("fuzzed mutations never crash, and parseable mutants extract in range") {
    auto base = corpus::synth_pe(corpus::SynthProfile::packed_default(), 9).bytes;
    Rng rng(0xF00D);
    size_t parsed = 0, rejected = 0;
    for (int round = 0; round < 300; ++round) {
        std::vector<uint8_t> bytes = base;
        if (round % 5 == 4) {
            bytes.resize(1 + rng.below(bytes.size())); // random truncation
        }
        size_t flips = 1 + rng.below(16);
        for (size_t i = 0; i < flips && !bytes.empty(); ++i) {
            bytes[rng.below(bytes.size())] = static_cast<uint8_t>(rng.below(256));
        }
        try {
            pe::PeFile pf = pe::parse_pe(bytes);
            ++parsed;
            FeatureVector v = extract_all(pf, 0);
            for (int id = 43; id <= 48; ++id) {
                bool in_range = (v.get(id) >= 0.0 && v.get(id) <= 8.0) || v.get(id) == -1.0;
                CHECK(in_range);
            }
            for (int id = 49; id <= 112; ++id) {
                CHECK(v.get(id) >= 0);
                CHECK(v.get(id) <= 255);
            }
            CHECK(v.get(24) <= 1.0);
            CHECK(v.get(116) <= 1.0);
            CHECK(v.get(41) <= v.get(40));
        } catch (const Error& e) {
            CHECK(e.code() == Errc::malformed_pe);
            ++rejected;
        }
    }
    CHECK(parsed + rejected == 300);
}

} // TEST_SUITE
