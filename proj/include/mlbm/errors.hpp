#pragma once

#include <stdexcept>
#include <string>

namespace mlbm {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed caller input (empty names, unparseable files, bad flags).
class InvalidInput : public Error {
 public:
  using Error::Error;
};

/// Parameters violating ModelParams / FitConfig invariants.
class InvalidParameter : public Error {
 public:
  using Error::Error;
};

class DimensionMismatch : public Error {
 public:
  using Error::Error;
};

/// The graph cannot be fitted (e.g. it has no edges).
class CannotFit : public Error {
 public:
  using Error::Error;
};

/// Non-finite value encountered during inference.
class NumericalError : public Error {
 public:
  NumericalError(const std::string& what, int iteration = -1)
      : Error(iteration >= 0 ? what + " (iteration " + std::to_string(iteration) + ")" : what),
        iteration_(iteration) {}

  int iteration() const noexcept { return iteration_; }

 private:
  int iteration_;
};

}  // namespace mlbm
