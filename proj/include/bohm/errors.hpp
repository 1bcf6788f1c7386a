#pragma once

#include <stdexcept>
#include <string>

namespace bohm {

/// Base of every error raised by the library. `kind()` is a stable tag used in
/// machine-readable diagnostics.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
    virtual const char* kind() const noexcept { return "Error"; }
};

#define BOHM_DEFINE_ERROR(Name)                                              \
    class Name : public Error {                                              \
    public:                                                                  \
        using Error::Error;                                                  \
        const char* kind() const noexcept override { return #Name; }         \
    }

/// Invalid physical or numerical parameter (non-positive mass, width, ...).
BOHM_DEFINE_ERROR(InvalidParameter);
/// Velocity requested where the density is below the node floor.
BOHM_DEFINE_ERROR(NodeProximity);
/// Finite-difference stencil leaves the evaluator's domain.
BOHM_DEFINE_ERROR(DomainError);
/// Phase unwrapping requested across a density node.
BOHM_DEFINE_ERROR(NodeOnGrid);
/// Temporal phase alignment failed to keep increments below pi.
BOHM_DEFINE_ERROR(BranchMismatch);
/// Adaptive step fell below h_min for reasons other than a node.
BOHM_DEFINE_ERROR(StepUnderflow);
/// Density has (numerically) no mass on the sampling domain.
BOHM_DEFINE_ERROR(DegenerateDensity);
/// Grid too coarse to resolve the requested features.
BOHM_DEFINE_ERROR(ResolutionError);
/// Too many trajectories of a swarm aborted.
BOHM_DEFINE_ERROR(SwarmFailure);

#undef BOHM_DEFINE_ERROR

/// Configuration error carrying the offending field path (e.g. "physics.sigma0").
class ConfigError : public Error {
public:
    ConfigError(std::string path, const std::string& reason)
        : Error(path + ": " + reason), path_(std::move(path)) {}
    const char* kind() const noexcept override { return "ConfigError"; }
    const std::string& path() const noexcept { return path_; }

private:
    std::string path_;
};

}  // namespace bohm
