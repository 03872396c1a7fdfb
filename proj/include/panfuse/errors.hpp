#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace panfuse {

/// Malformed or inconsistent input data (shapes, payloads, values).
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Operands whose dimensions do not agree.
class ShapeError : public DataError {
 public:
  using DataError::DataError;
};

/// Invalid user configuration (bad keys, out-of-range parameters).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Non-finite values or a singular Fourier symbol during a solve.
class NumericalError : public std::runtime_error {
 public:
  NumericalError(const std::string& what, std::size_t iteration)
      : std::runtime_error(what), iteration_(iteration) {}
  explicit NumericalError(const std::string& what)
      : std::runtime_error(what), iteration_(0) {}

  std::size_t iteration() const noexcept { return iteration_; }

 private:
  std::size_t iteration_;
};

}  // namespace panfuse
