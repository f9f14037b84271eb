#pragma once

#include <stdexcept>
#include <string>

namespace cylattract {

// Common base so callers can catch everything from this library at once.
struct Error : std::runtime_error {
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Curve / lifting.
struct DiameterExceeded : Error { using Error::Error; };
struct WindowMiss : Error { using Error::Error; };

// Map evaluation / inversion.
struct DomainError : Error { using Error::Error; };
struct OutOfBranch : Error { using Error::Error; };
struct NoConvergence : Error { using Error::Error; };

// Certification.
struct GridTooCoarse : Error { using Error::Error; };

// Pullback loop.
struct IterationCap : Error { using Error::Error; };
struct Unclassifiable : Error { using Error::Error; };

// Witness / covers.
struct EvidenceFailure : Error { using Error::Error; };
struct CoverageFailure : Error { using Error::Error; };

// Bad parameters anywhere (construction invariants, preconditions).
struct ParamError : Error { using Error::Error; };

// Config / IO problems (CLI maps these to exit code 2).
struct ConfigError : Error { using Error::Error; };

}  // namespace cylattract
