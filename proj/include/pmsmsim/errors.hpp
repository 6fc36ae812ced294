#pragma once

#include <stdexcept>
#include <string>

namespace pmsm {

/// Base class of every exception thrown by this library.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Bad configuration or malformed input files. CLI exit code 2.
struct ConfigError : Error {
  using Error::Error;
};

/// Syntax error in a config file; message carries line and field.
struct ParseError : ConfigError {
  using ConfigError::ConfigError;
};

/// A structural invariant of a config or argument is violated;
/// the message names the offending field.
struct ValidationError : ConfigError {
  using ConfigError::ConfigError;
};

/// Numerical failure during a computation. CLI exit code 3.
struct NumericalError : Error {
  using Error::Error;
};

/// Newton iteration failed to reach its tolerance.
struct NonConvergent : NumericalError {
  using NumericalError::NumericalError;
};

/// A matrix that must be inverted is singular or too ill-conditioned.
struct SingularJacobian : NumericalError {
  using NumericalError::NumericalError;
};

/// A state or output component stopped being finite.
struct NonFinite : NumericalError {
  using NumericalError::NumericalError;
};

/// Position estimation requested with zero injection amplitude.
struct NoInjection : NumericalError {
  using NumericalError::NumericalError;
};

/// A time profile was evaluated outside its breakpoint range.
struct OutOfProfileDomain : NumericalError {
  using NumericalError::NumericalError;
};

/// Input series shorter than one demodulation window.
struct SeriesTooShort : ValidationError {
  using ValidationError::ValidationError;
};

/// File could not be read or written.
struct IoError : Error {
  using Error::Error;
};

}  // namespace pmsm
