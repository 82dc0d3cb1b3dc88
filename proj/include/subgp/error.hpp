#pragma once

#include <stdexcept>
#include <string>

namespace subgp {

/// Base for every error raised by the library. The CLI maps the subclasses
/// onto process exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid configuration or malformed input structure (exit code 2).
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Data that violates a domain precondition (exit code 3).
class DataError : public Error {
 public:
  using Error::Error;
};

/// Numerical breakdown: factorization or optimization failure (exit code 4).
class NumericalError : public Error {
 public:
  using Error::Error;
};

}  // namespace subgp
