#pragma once

#include <stdexcept>
#include <string>

namespace specvar {

enum class ErrorKind {
    NonFinite,
    ShapeError,
    NotSorted,
    InconsistentPartition,
    AsymmetricInput,
    NotBlockSorted,
    BadK,
    NotASubgradient,
    NotPolyhedral,
    AssumptionViolated,
    NoSimultaneousGauge,
    FullRank,
    NotInRegularSubdiff,
    RankZero,
    NotInSet,
    ProjectionUnavailable,
    NonFiniteBase,
    InvalidConfig,
    SamplingExhausted,
    IoError,
};

inline const char* to_string(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::NonFinite: return "NonFinite";
        case ErrorKind::ShapeError: return "ShapeError";
        case ErrorKind::NotSorted: return "NotSorted";
        case ErrorKind::InconsistentPartition: return "InconsistentPartition";
        case ErrorKind::AsymmetricInput: return "AsymmetricInput";
        case ErrorKind::NotBlockSorted: return "NotBlockSorted";
        case ErrorKind::BadK: return "BadK";
        case ErrorKind::NotASubgradient: return "NotASubgradient";
        case ErrorKind::NotPolyhedral: return "NotPolyhedral";
        case ErrorKind::AssumptionViolated: return "AssumptionViolated";
        case ErrorKind::NoSimultaneousGauge: return "NoSimultaneousGauge";
        case ErrorKind::FullRank: return "FullRank";
        case ErrorKind::NotInRegularSubdiff: return "NotInRegularSubdiff";
        case ErrorKind::RankZero: return "RankZero";
        case ErrorKind::NotInSet: return "NotInSet";
        case ErrorKind::ProjectionUnavailable: return "ProjectionUnavailable";
        case ErrorKind::NonFiniteBase: return "NonFiniteBase";
        case ErrorKind::InvalidConfig: return "InvalidConfig";
        case ErrorKind::SamplingExhausted: return "SamplingExhausted";
        case ErrorKind::IoError: return "IoError";
    }
    return "Unknown";
}

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

}  // namespace specvar
