#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace perfstokes {

enum class ErrorCode {
    OrderingViolation,
    DegenerateEta,
    UnsupportedFamily,
    InclusionViolation,
    UnresolvedHole,
    NonZeroMean,
    NoConvergence,
    SingularSystem,
    NoDirichletData,
    MissingHole,
    AlignmentError,
    NotSPD,
    WindowTooSmall,
    BudgetExceeded,
    InvalidArgument,
    ConfigError,
    IoError,
};

std::string_view to_string(ErrorCode code);

/// Base exception for every failure raised by the library. The code is what
/// callers branch on; the message is for humans.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

/// Convergence report attached to iterative solver failures.
struct SolveReport {
    int iterations = 0;
    double residual = 0.0;
    double seconds = 0.0;
};

class NoConvergenceError : public Error {
public:
    NoConvergenceError(const std::string& message, SolveReport report)
        : Error(ErrorCode::NoConvergence, message), report_(report) {}

    const SolveReport& report() const noexcept { return report_; }

private:
    SolveReport report_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
    throw Error(code, message);
}

inline void require(bool condition, ErrorCode code, const std::string& message) {
    if (!condition) fail(code, message);
}

}  // namespace perfstokes
