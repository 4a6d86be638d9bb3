#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace heatpack {

enum class ErrorKind {
    NoFeasibleEpsilon,
    EmptySet,
    SupportViolation,
    QuadratureNonConvergence,
    FrameErrorExceeded,
    NonpositiveTime,
    PointOutsideDomain,
    BoundaryViolation,
    PreconditionViolation,
    HypothesisViolation,
    BoundViolation,
    PencilDegenerate,
    NegativeArgument,
    InfeasibleMeasure,
    NoConvergence,
    AssertionFailure,
    SandwichViolation,
    ConfigError,
    IoError,
};

const char* kind_name(ErrorKind kind);

// CLI exit code for an error kind: 2 precondition, 3 nonconvergence, 4 invariant.
int exit_code(ErrorKind kind);

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what, std::vector<double> values = {})
        : std::runtime_error(what), kind_(kind), values_(std::move(values)) {}

    ErrorKind kind() const noexcept { return kind_; }

    // Numbers carried by the error (measured error, bound triple, offending trial, ...).
    const std::vector<double>& values() const noexcept { return values_; }

private:
    ErrorKind kind_;
    std::vector<double> values_;
};

[[noreturn]] void fail(ErrorKind kind, const std::string& what, std::vector<double> values = {});

} // namespace heatpack
