#pragma once

#include <stdexcept>
#include <string>

namespace packdet {

/// Structured failure codes surfaced by the library. Each code corresponds to
/// one documented failure mode of some operation.
enum class Errc {
    malformed_pe,
    unmapped_rva,
    deleted_feature,
    empty_matrix,
    bad_k,
    no_votes,
    unfitted_model,
    single_class,
    dimension_mismatch,
    unsupported_family,
    empty_selection,
    zero_accuracy,
    too_few_points,
    time_order,
    length_mismatch,
    bad_profile,
    format_version_mismatch,
    corrupt_row,
    zero_train_time,
    bad_argument,
};

inline const char* errc_name(Errc c) {
    switch (c) {
        case Errc::malformed_pe: return "MalformedPe";
        case Errc::unmapped_rva: return "UnmappedRva";
        case Errc::deleted_feature: return "DeletedFeature";
        case Errc::empty_matrix: return "EmptyMatrix";
        case Errc::bad_k: return "BadK";
        case Errc::no_votes: return "NoVotes";
        case Errc::unfitted_model: return "UnfittedModel";
        case Errc::single_class: return "SingleClass";
        case Errc::dimension_mismatch: return "DimensionMismatch";
        case Errc::unsupported_family: return "UnsupportedFamily";
        case Errc::empty_selection: return "EmptySelection";
        case Errc::zero_accuracy: return "ZeroAccuracy";
        case Errc::too_few_points: return "TooFewPoints";
        case Errc::time_order: return "TimeOrder";
        case Errc::length_mismatch: return "LengthMismatch";
        case Errc::bad_profile: return "BadProfile";
        case Errc::format_version_mismatch: return "FormatVersionMismatch";
        case Errc::corrupt_row: return "CorruptRow";
        case Errc::zero_train_time: return "ZeroTrainTime";
        case Errc::bad_argument: return "BadArgument";
    }
    return "UnknownError";
}

class Error : public std::runtime_error {
public:
    Error(Errc code, const std::string& message)
        : std::runtime_error(std::string(errc_name(code)) + ": " + message), code_(code) {}

    Errc code() const { return code_; }

private:
    Errc code_;
};

[[noreturn]] inline void raise(Errc code, const std::string& message) {
    throw Error(code, message);
}

} // namespace packdet
