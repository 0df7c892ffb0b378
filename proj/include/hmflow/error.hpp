#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace hmflow {

enum class ErrorCode {
  kind_mismatch,
  non_unique_geodesic,
  unsupported_on_target,
  empty_input,
  shape_mismatch,
  max_sweeps_exceeded,
  step_too_large,
  invalid_time,
  scale_out_of_range,
  degenerate_frequency,
  domain_too_small,
  invalid_argument,
  config_not_found,
  config_invalid,
  io_error,
};

inline const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kind_mismatch: return "KindMismatch";
    case ErrorCode::non_unique_geodesic: return "NonUniqueGeodesic";
    case ErrorCode::unsupported_on_target: return "UnsupportedOnTarget";
    case ErrorCode::empty_input: return "EmptyInput";
    case ErrorCode::shape_mismatch: return "ShapeMismatch";
    case ErrorCode::max_sweeps_exceeded: return "MaxSweepsExceeded";
    case ErrorCode::step_too_large: return "StepTooLarge";
    case ErrorCode::invalid_time: return "InvalidTime";
    case ErrorCode::scale_out_of_range: return "ScaleOutOfRange";
    case ErrorCode::degenerate_frequency: return "DegenerateFrequency";
    case ErrorCode::domain_too_small: return "DomainTooSmall";
    case ErrorCode::invalid_argument: return "InvalidArgument";
    case ErrorCode::config_not_found: return "ConfigNotFound";
    case ErrorCode::config_invalid: return "ConfigInvalid";
    case ErrorCode::io_error: return "IoError";
  }
  return "Unknown";
}

/// Base exception for every failure raised by the library. The code is the
/// stable identifier; the message is for humans.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

/// Raised by the iterative solvers when the sweep budget runs out. Carries
/// whatever the solver had computed so far.
template <class Partial>
class MaxSweepsExceeded : public Error {
 public:
  MaxSweepsExceeded(const std::string& what, Partial partial)
      : Error(ErrorCode::max_sweeps_exceeded, what), partial_(std::move(partial)) {}

  const Partial& partial() const noexcept { return partial_; }

 private:
  Partial partial_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) { throw Error(code, what); }

inline void require(bool cond, ErrorCode code, const std::string& what) {
  if (!cond) fail(code, what);
}

}  // namespace hmflow
