#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace spectra_gap {

enum class ErrorCode {
    DimensionMismatch,
    NotSymmetric,
    NotSkew,
    NonFinite,
    NoConvergence,
    DefectiveOperator,
    IncompleteSpectrum,
    InvalidGrid,
    UnsupportedBC,
    NotPositive,
    BoundaryViolation,
    BallsOverlap,
    BallOutsideDomain,
    ConstraintViolated,
    NearSingularDenominator,
    IndexOutOfRange,
    InvalidZ,
    InvalidArgument,
    NotNeumann,
    InsufficientSpectrum,
    NonMonotone,
    ConfigError,
};

inline std::string_view to_string(ErrorCode code) {
    switch (code) {
        case ErrorCode::DimensionMismatch: return "DimensionMismatch";
        case ErrorCode::NotSymmetric: return "NotSymmetric";
        case ErrorCode::NotSkew: return "NotSkew";
        case ErrorCode::NonFinite: return "NonFinite";
        case ErrorCode::NoConvergence: return "NoConvergence";
        case ErrorCode::DefectiveOperator: return "DefectiveOperator";
        case ErrorCode::IncompleteSpectrum: return "IncompleteSpectrum";
        case ErrorCode::InvalidGrid: return "InvalidGrid";
        case ErrorCode::UnsupportedBC: return "UnsupportedBC";
        case ErrorCode::NotPositive: return "NotPositive";
        case ErrorCode::BoundaryViolation: return "BoundaryViolation";
        case ErrorCode::BallsOverlap: return "BallsOverlap";
        case ErrorCode::BallOutsideDomain: return "BallOutsideDomain";
        case ErrorCode::ConstraintViolated: return "ConstraintViolated";
        case ErrorCode::NearSingularDenominator: return "NearSingularDenominator";
        case ErrorCode::IndexOutOfRange: return "IndexOutOfRange";
        case ErrorCode::InvalidZ: return "InvalidZ";
        case ErrorCode::InvalidArgument: return "InvalidArgument";
        case ErrorCode::NotNeumann: return "NotNeumann";
        case ErrorCode::InsufficientSpectrum: return "InsufficientSpectrum";
        case ErrorCode::NonMonotone: return "NonMonotone";
        case ErrorCode::ConfigError: return "ConfigError";
    }
    return "Unknown";
}

/// Every failure raised by the library carries one of the codes above.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

inline void require(bool condition, ErrorCode code, const std::string& what) {
    if (!condition) throw Error(code, what);
}

} // namespace spectra_gap
