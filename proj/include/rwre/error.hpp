#pragma once

#include <stdexcept>
#include <string>

namespace rwre {

enum class ErrorCode {
  NegativeWeight,
  NotNormalized,
  InvalidExponent,
  InvalidSpec,
  DegenerateSite,
  NotIrreducible,
  NoConvergence,
  NotElliptic,
  OutOfDomain,
  SingularSystem,
  DensityMismatch,
  TooLarge,
  ConfigError,
  UnknownExperiment,
};

const char* to_string(ErrorCode code);

// Single exception type for the library; callers switch on code().
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace rwre
