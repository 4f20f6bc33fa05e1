#pragma once

#include <stdexcept>
#include <string>

namespace pacfs {

/// Base class of every error raised by the library. The CLI maps each
/// subclass onto a distinct process exit code.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Missing or inconsistent configuration (exit code 2).
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Malformed or out-of-domain input data (exit code 3).
class DataError : public Error {
 public:
  using Error::Error;
};

/// Numerical failure such as an indefinite Gram matrix (exit code 4).
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// Wall-clock budget exhausted (exit code 5).
class BudgetExceeded : public Error {
 public:
  using Error::Error;
};

}  // namespace pacfs
