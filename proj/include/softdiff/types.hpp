#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>

namespace softdiff {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionError : public Error {
 public:
  DimensionError(const std::string& what, long expected, long actual)
      : Error(what + ": expected dimension " + std::to_string(expected) +
              ", got " + std::to_string(actual)),
        expected_(expected),
        actual_(actual) {}

  long expected() const { return expected_; }
  long actual() const { return actual_; }

 private:
  long expected_;
  long actual_;
};

class RangeError : public Error {
 public:
  using Error::Error;
};

class NumericalError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

inline void check_dim(const std::string& what, long expected, long actual) {
  if (expected != actual) throw DimensionError(what, expected, actual);
}

}  // namespace softdiff
