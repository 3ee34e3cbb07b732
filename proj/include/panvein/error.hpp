#pragma once

#include <stdexcept>
#include <string>

namespace panvein {

/// Failure categories shared by every solver. The C API maps these
/// one-to-one onto `pv_status` codes.
enum class ErrorCode {
  InvalidArgument = 1,
  Domain,
  ProfileValidity,
  Bracket,
  ParameterRegime,
  NonConvergence,
  Divergence,
  IntegrationFailure,
  Singular,
  Conditioning,
  Mode,
  DegenerateQuadratic,
  StepSize,
  BlowUp,
  Validation,
  Io,
};

const char* to_string(ErrorCode code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

/// Iterative solver gave up; carries the last residual norm it saw.
class NonConvergenceError : public Error {
 public:
  NonConvergenceError(const std::string& what, double last_residual)
      : Error(ErrorCode::NonConvergence, what), last_residual_(last_residual) {}

  double last_residual() const noexcept { return last_residual_; }

 private:
  double last_residual_;
};

/// Marching integrator produced a non-finite state at `location`
/// (a position in cm for spatial marches, a time in min for evolution).
class IntegrationError : public Error {
 public:
  IntegrationError(ErrorCode code, const std::string& what, double location)
      : Error(code, what), location_(location) {}

  double location() const noexcept { return location_; }

 private:
  double location_;
};

}  // namespace panvein
