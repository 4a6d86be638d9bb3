#include "heatpack/error.hpp"

namespace heatpack {

const char* kind_name(ErrorKind kind)
{
    switch (kind) {
    case ErrorKind::NoFeasibleEpsilon: return "NoFeasibleEpsilon";
    case ErrorKind::EmptySet: return "EmptySet";
    case ErrorKind::SupportViolation: return "SupportViolation";
    case ErrorKind::QuadratureNonConvergence: return "QuadratureNonConvergence";
    case ErrorKind::FrameErrorExceeded: return "FrameErrorExceeded";
    case ErrorKind::NonpositiveTime: return "NonpositiveTime";
    case ErrorKind::PointOutsideDomain: return "PointOutsideDomain";
    case ErrorKind::BoundaryViolation: return "BoundaryViolation";
    case ErrorKind::PreconditionViolation: return "PreconditionViolation";
    case ErrorKind::HypothesisViolation: return "HypothesisViolation";
    case ErrorKind::BoundViolation: return "BoundViolation";
    case ErrorKind::PencilDegenerate: return "PencilDegenerate";
    case ErrorKind::NegativeArgument: return "NegativeArgument";
    case ErrorKind::InfeasibleMeasure: return "InfeasibleMeasure";
    case ErrorKind::NoConvergence: return "NoConvergence";
    case ErrorKind::AssertionFailure: return "AssertionFailure";
    case ErrorKind::SandwichViolation: return "SandwichViolation";
    case ErrorKind::ConfigError: return "ConfigError";
    case ErrorKind::IoError: return "IoError";
    }
    return "Unknown";
}

int exit_code(ErrorKind kind)
{
    switch (kind) {
    case ErrorKind::QuadratureNonConvergence:
    case ErrorKind::NoConvergence:
        return 3;
    case ErrorKind::FrameErrorExceeded:
    case ErrorKind::BoundViolation:
    case ErrorKind::AssertionFailure:
    case ErrorKind::SandwichViolation:
        return 4;
    default:
        return 2;
    }
}

void fail(ErrorKind kind, const std::string& what, std::vector<double> values)
{
    throw Error(kind, std::string(kind_name(kind)) + ": " + what, std::move(values));
}

} // namespace heatpack
