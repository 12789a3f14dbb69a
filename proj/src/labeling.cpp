#include "packdet/labeling.hpp"

#include "packdet/error.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

namespace packdet {

const char* verdict_name(Verdict v) {
    switch (v) {
        case Verdict::packed: return "packed";
        case Verdict::not_packed: return "not_packed";
        case Verdict::abstain: return "abstain";
    }
    return "?";
}

Verdict verdict_from_name(const std::string& name) {
    if (name == "packed") return Verdict::packed;
    if (name == "not_packed") return Verdict::not_packed;
    if (name == "abstain") return Verdict::abstain;
    raise(Errc::corrupt_row, "unknown verdict: " + name);
}

int default_vote_threshold(int non_abstain_count) {
    return (non_abstain_count + 1) / 2;
}

GroundTruth majority_vote(const std::vector<DetectorVote>& votes, int threshold) {
    int packed = 0, total = 0;
    std::string digest;
    std::set<std::string> detectors;
    for (const DetectorVote& v : votes) {
        if (digest.empty()) {
            digest = v.sample_digest;
        } else if (!v.sample_digest.empty() && v.sample_digest != digest) {
            raise(Errc::bad_argument, "majority_vote: votes for different samples");
        }
        if (!detectors.insert(v.detector_name).second) {
            raise(Errc::bad_argument,
                  "majority_vote: detector voted twice: " + v.detector_name);
        }
        if (v.verdict == Verdict::abstain) continue;
        ++total;
        if (v.verdict == Verdict::packed) ++packed;
    }
    if (total == 0) raise(Errc::no_votes, "every detector abstained");
    if (threshold < 0) raise(Errc::bad_argument, "threshold must be >= 1 (0 = default rule)");
    int used = threshold == 0 ? default_vote_threshold(total) : threshold;

    GroundTruth gt;
    gt.sample_digest = digest;
    gt.votes_for = packed;
    gt.votes_total = total;
    gt.threshold = used;
    gt.label = packed >= used ? 1 : 0;
    return gt;
}

DetectorVote heuristic_detect(const pe::PeFile& pe, const FeatureVector& v,
                              const HeuristicConfig& cfg) {
    int fired = 0;
    bool packer_name = false;
    for (const pe::SectionInfo& s : pe.sections) {
        if (std::find(cfg.packer_section_names.begin(), cfg.packer_section_names.end(),
                      s.name) != cfg.packer_section_names.end()) {
            packer_name = true;
            break;
        }
    }
    if (packer_name) ++fired;
    if (v.get(27) >= 1.0 || v.get(30) >= 1.0) ++fired;
    if (v.get(35) == 1.0) ++fired;
    if (v.get(48) >= cfg.entropy_cutoff) ++fired;
    if (v.get(39) >= 1.0) ++fired;

    DetectorVote vote;
    vote.detector_name = "heuristic";
    vote.sample_digest = v.sample_digest;
    vote.verdict = fired >= cfg.min_rules ? Verdict::packed : Verdict::not_packed;
    return vote;
}

std::vector<DetectorVote> read_vote_file(std::istream& in) {
    std::vector<DetectorVote> votes;
    std::string line;
    size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line[0] == '#') continue;
        std::istringstream ls(line);
        DetectorVote v;
        std::string verdict;
        if (!std::getline(ls, v.detector_name, '\t') ||
            !std::getline(ls, v.sample_digest, '\t') || !std::getline(ls, verdict, '\t')) {
            raise(Errc::corrupt_row, "vote file line " + std::to_string(line_no));
        }
        v.verdict = verdict_from_name(verdict);
        votes.push_back(std::move(v));
    }
    return votes;
}

std::vector<DetectorVote> read_vote_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) raise(Errc::bad_argument, "cannot open vote file: " + path);
    return read_vote_file(in);
}

void write_vote_file(std::ostream& out, const std::vector<DetectorVote>& votes) {
    for (const DetectorVote& v : votes) {
        out << v.detector_name << '\t' << v.sample_digest << '\t' << verdict_name(v.verdict)
            << '\n';
    }
}

void write_vote_file(const std::string& path, const std::vector<DetectorVote>& votes) {
    std::ofstream out(path);
    if (!out) raise(Errc::bad_argument, "cannot write vote file: " + path);
    write_vote_file(out, votes);
}

} // namespace packdet
