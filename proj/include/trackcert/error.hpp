#pragma once

#include <stdexcept>
#include <string>

namespace trackcert {

enum class ErrorCode {
  StepsizeOutOfRange,
  BadModuli,
  DeltaOutOfRange,
  NonFinite,
  SingularPivot,
  SignViolation,
  DegenerateState,
  NoContraction,
  DegenerateFixedPoint,
  Infeasible,
  ValidateFailed,
  HorizonMismatch,
  ProxUnavailable,
  NonConstantSchedule,
  Unsupported,
  BadConfig,
};

const char* to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace trackcert
