#include "pdiff/error.hpp"

namespace pdiff {

std::string_view to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::AlphaOutOfRange: return "AlphaOutOfRange";
    case ErrorKind::DegenerateDiffusion: return "DegenerateDiffusion";
    case ErrorKind::InconsistentDerivatives: return "InconsistentDerivatives";
    case ErrorKind::DeclaredBoundViolated: return "DeclaredBoundViolated";
    case ErrorKind::UnsupportedOrder: return "UnsupportedOrder";
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    case ErrorKind::NonFinite: return "NonFinite";
    case ErrorKind::GridMismatch: return "GridMismatch";
    case ErrorKind::DomainTooSmall: return "DomainTooSmall";
    case ErrorKind::OutOfDomain: return "OutOfDomain";
    case ErrorKind::ToleranceNotMet: return "ToleranceNotMet";
    case ErrorKind::IntegrationFailure: return "IntegrationFailure";
    case ErrorKind::EmptySample: return "EmptySample";
    case ErrorKind::Config: return "Config";
  }
  return "Unknown";
}

Error::Error(ErrorKind kind, const std::string& message,
             std::optional<std::size_t> index)
    : std::runtime_error(std::string(to_string(kind)) + ": " + message),
      kind_(kind),
      index_(index) {}

}  // namespace pdiff
