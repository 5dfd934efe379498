#include "perfstokes/errors.hpp"

namespace perfstokes {

std::string_view to_string(ErrorCode code) {
    switch (code) {
        case ErrorCode::OrderingViolation: return "OrderingViolation";
        case ErrorCode::DegenerateEta: return "DegenerateEta";
        case ErrorCode::UnsupportedFamily: return "UnsupportedFamily";
        case ErrorCode::InclusionViolation: return "InclusionViolation";
        case ErrorCode::UnresolvedHole: return "UnresolvedHole";
        case ErrorCode::NonZeroMean: return "NonZeroMean";
        case ErrorCode::NoConvergence: return "NoConvergence";
        case ErrorCode::SingularSystem: return "SingularSystem";
        case ErrorCode::NoDirichletData: return "NoDirichletData";
        case ErrorCode::MissingHole: return "MissingHole";
        case ErrorCode::AlignmentError: return "AlignmentError";
        case ErrorCode::NotSPD: return "NotSPD";
        case ErrorCode::WindowTooSmall: return "WindowTooSmall";
        case ErrorCode::BudgetExceeded: return "BudgetExceeded";
        case ErrorCode::InvalidArgument: return "InvalidArgument";
        case ErrorCode::ConfigError: return "ConfigError";
        case ErrorCode::IoError: return "IoError";
    }
    return "Unknown";
}

}  // namespace perfstokes
