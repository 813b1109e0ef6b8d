#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace ergocap {

enum class ErrorKind {
    InvalidArgument,
    NotStochastic,
    NotOrdered,
    Reducible,
    NoConvergence,
    EmptyTrajectory,
    BadStateIndex,
    BadThreshold,
    PolicyDisabled,
    SingularDenominator,
    DegenerateGeometry,
    MissingNuC,
    NonMonotoneTable,
    BracketFailure,
    Config,
};

constexpr std::string_view to_string(ErrorKind kind) noexcept {
    switch (kind) {
        case ErrorKind::InvalidArgument: return "InvalidArgument";
        case ErrorKind::NotStochastic: return "NotStochastic";
        case ErrorKind::NotOrdered: return "NotOrdered";
        case ErrorKind::Reducible: return "Reducible";
        case ErrorKind::NoConvergence: return "NoConvergence";
        case ErrorKind::EmptyTrajectory: return "EmptyTrajectory";
        case ErrorKind::BadStateIndex: return "BadStateIndex";
        case ErrorKind::BadThreshold: return "BadThreshold";
        case ErrorKind::PolicyDisabled: return "PolicyDisabled";
        case ErrorKind::SingularDenominator: return "SingularDenominator";
        case ErrorKind::DegenerateGeometry: return "DegenerateGeometry";
        case ErrorKind::MissingNuC: return "MissingNuC";
        case ErrorKind::NonMonotoneTable: return "NonMonotoneTable";
        case ErrorKind::BracketFailure: return "BracketFailure";
        case ErrorKind::Config: return "Config";
    }
    return "Unknown";
}

/// Every failure raised by the library carries a machine-checkable kind.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

}  // namespace ergocap
