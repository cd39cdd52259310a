#pragma once

#include <stdexcept>
#include <string>

namespace dipls {

// Base of every error the library throws.  The CLI maps the three branches
// below to its exit codes: validation -> 2, semantic mismatch -> 3,
// numerical failure -> 4.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// --- exit code 2: the input itself is unacceptable -------------------------
struct ValidationError : Error {
  using Error::Error;
};

struct ConfigError : ValidationError {
  using ValidationError::ValidationError;
};

struct DimensionError : ValidationError {
  using ValidationError::ValidationError;
};

// out-of-range request (frequency band beyond Nyquist, component index past
// k_effective, sample index past the condition size, ...)
struct RangeError : ValidationError {
  using ValidationError::ValidationError;
};

// a frequency band that contains no FFT bins at all
struct EmptyBandError : ValidationError {
  using ValidationError::ValidationError;
};

struct IoError : ValidationError {
  using ValidationError::ValidationError;
};

// --- exit code 3: inputs are individually fine but disagree ----------------
struct SemanticError : Error {
  using Error::Error;
};

// --- exit code 4: the math gave up ------------------------------------------
struct NumericalError : Error {
  using Error::Error;
};

// y'y == 0: the label vector carries no variance to regress on
struct DegenerateLabelError : NumericalError {
  using NumericalError::NumericalError;
};

// the weight direction collapsed to (numerically) zero
struct DegenerateDirectionError : NumericalError {
  using NumericalError::NumericalError;
};

// linear system stayed singular even after the ridge; carries the estimate
struct ConditioningError : NumericalError {
  double condition_estimate;
  ConditioningError(const std::string& msg, double cond)
      : NumericalError(msg + " (condition estimate " + std::to_string(cond) + ")"),
        condition_estimate(cond) {}
};

}  // namespace dipls
