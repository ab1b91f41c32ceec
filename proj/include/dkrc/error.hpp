#pragma once

#include <stdexcept>
#include <string>

namespace dkrc {

enum class ErrorKind {
  NonFinite,
  DimensionMismatch,
  NoConvergence,
  NotStabilizable,
  SingularR,
  BadDims,
  BadFractions,
  DegenerateBatch,
  DegenerateLift,
  NonFiniteLoss,
  PolicyFailure,
  EmptyTrajectory,
  Io,
  ParseError,
  Config,
};

const char* to_string(ErrorKind kind);

// Single exception type for the library; `kind()` lets callers branch
// without string matching.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what),
        kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace dkrc
