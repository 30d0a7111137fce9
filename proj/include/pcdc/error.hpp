// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace pcdc {

/// Base of every error raised by the library. `exit_code()` is the process
/// status the CLI reports for it.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
  [[nodiscard]] virtual int exit_code() const noexcept { return 1; }
};

/// Bad input values, bad configuration, malformed or inconsistent data.
class ValidationError : public Error {
public:
  using Error::Error;
};

/// Tensor extents that do not line up.
class DimensionError : public ValidationError {
public:
  using ValidationError::ValidationError;
};

/// Configuration that is well-formed but not usable (e.g. unstable timestep).
class ConfigError : public ValidationError {
public:
  using ValidationError::ValidationError;
};

/// Malformed file contents.
class ParseError : public ValidationError {
public:
  using ValidationError::ValidationError;
};

/// NaN/Inf encountered in a computation.
class NumericError : public Error {
public:
  using Error::Error;
  [[nodiscard]] int exit_code() const noexcept override { return 2; }
};

/// Filesystem failures.
class IoError : public Error {
public:
  using Error::Error;
  [[nodiscard]] int exit_code() const noexcept override { return 3; }
};

} // namespace pcdc
