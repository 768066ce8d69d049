#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace tgdr {

enum class ErrorCode {
    InvalidArgument,
    DimMismatch,
    NonFinite,
    Divergence,
    MissingClass,
    DegenerateStudy,
    Stratification,
    ResampleInfeasible,
    TooManyFailures,
    NoFeatures,
    Parse,
    Io,
    SchemaVersion,
    IncompatibleModel,
};

// Stable machine-parsable identifier, printed by the CLI on failure.
constexpr std::string_view error_code_name(ErrorCode code) {
    switch (code) {
    case ErrorCode::InvalidArgument: return "INVALID_ARGUMENT";
    case ErrorCode::DimMismatch: return "DIM_MISMATCH";
    case ErrorCode::NonFinite: return "NON_FINITE";
    case ErrorCode::Divergence: return "DIVERGENCE";
    case ErrorCode::MissingClass: return "MISSING_CLASS";
    case ErrorCode::DegenerateStudy: return "DEGENERATE_STUDY";
    case ErrorCode::Stratification: return "STRATIFICATION";
    case ErrorCode::ResampleInfeasible: return "RESAMPLE_INFEASIBLE";
    case ErrorCode::TooManyFailures: return "TOO_MANY_FAILURES";
    case ErrorCode::NoFeatures: return "NO_FEATURES";
    case ErrorCode::Parse: return "PARSE_ERROR";
    case ErrorCode::Io: return "IO_ERROR";
    case ErrorCode::SchemaVersion: return "SCHEMA_VERSION";
    case ErrorCode::IncompatibleModel: return "INCOMPATIBLE_MODEL";
    }
    return "UNKNOWN";
}

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(what), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) {
    throw Error(code, what);
}

inline void require(bool cond, ErrorCode code, const std::string& what) {
    if (!cond) throw Error(code, what);
}

}  // namespace tgdr
