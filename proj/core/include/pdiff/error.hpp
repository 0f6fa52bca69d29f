#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace pdiff {

enum class ErrorKind {
  AlphaOutOfRange,
  DegenerateDiffusion,
  InconsistentDerivatives,
  DeclaredBoundViolated,
  UnsupportedOrder,
  InvalidArgument,
  NonFinite,
  GridMismatch,
  DomainTooSmall,
  OutOfDomain,
  ToleranceNotMet,
  IntegrationFailure,
  EmptySample,
  Config,
};

std::string_view to_string(ErrorKind kind) noexcept;

/// Library-wide exception. `index()` carries the offending step or path
/// index for NonFinite and similar positional failures.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message,
        std::optional<std::size_t> index = std::nullopt);

  ErrorKind kind() const noexcept { return kind_; }
  std::optional<std::size_t> index() const noexcept { return index_; }

 private:
  ErrorKind kind_;
  std::optional<std::size_t> index_;
};

}  // namespace pdiff
