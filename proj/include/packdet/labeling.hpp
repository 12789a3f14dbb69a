#pragma once

#include "packdet/features.hpp"
#include "packdet/pe_parser.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace packdet {

enum class Verdict { packed, not_packed, abstain };

const char* verdict_name(Verdict v);
Verdict verdict_from_name(const std::string& name);

struct DetectorVote {
    std::string detector_name;
    std::string sample_digest;
    Verdict verdict = Verdict::abstain;
};

struct GroundTruth {
    std::string sample_digest;
    int label = 0; // 1 = packed
    int votes_for = 0;
    int votes_total = 0; // non-abstaining voters
    int threshold = 0;
};

/// Vote count needed to call a sample packed: ceil(n/2) of the non-abstaining
/// voters (3 of 5, 2 of 4).
int default_vote_threshold(int non_abstain_count);

/// Majority decision over one sample's votes. Abstains shrink the
/// denominator. threshold 0 selects the default rule. Raises
/// Error{no_votes} when every detector abstained.
GroundTruth majority_vote(const std::vector<DetectorVote>& votes, int threshold = 0);

struct HeuristicConfig {
    /// Section names associated with known packers (rule a).
    std::vector<std::string> packer_section_names = {
        "UPX0", "UPX1",    "UPX2",    ".aspack", ".adata",   ".petite",
        "MPRESS1", "MPRESS2", "kkrunchy", ".themida", ".vmp0", ".vmp1",
        ".enigma1", ".enigma2", "FSG!",   ".nsp0",  ".nsp1",
    };
    double entropy_cutoff = 7.0; // rule d
    int min_rules = 2;           // rules that must fire to vote packed
};

/// Built-in structural detector. Votes packed when at least min_rules of
/// these fire: a known packer section name, a writable+executable section,
/// an entry point outside the standard sections, entry-section entropy at or
/// above the cutoff, or a section with virtual size above its raw size.
/// Never abstains.
DetectorVote heuristic_detect(const pe::PeFile& pe, const FeatureVector& v,
                              const HeuristicConfig& cfg = {});

/// Vote files: one record per line, detector name, sample digest (hex) and
/// verdict, tab-separated, UTF-8.
std::vector<DetectorVote> read_vote_file(std::istream& in);
std::vector<DetectorVote> read_vote_file(const std::string& path);
void write_vote_file(std::ostream& out, const std::vector<DetectorVote>& votes);
void write_vote_file(const std::string& path, const std::vector<DetectorVote>& votes);

} // namespace packdet
