#pragma once

#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace riccatitron {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Base class for every error raised by the library. The C API maps the
/// concrete subclasses onto stable status codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input: wrong shapes, non-PD costs, bad parameters, bad config.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// A numerical routine failed (non-convergence, loss of definiteness).
class NumericError : public Error {
 public:
  using Error::Error;
};

/// A stateful object was driven out of order (act/observe, predict/update).
class ProtocolError : public Error {
 public:
  using Error::Error;
};

inline void Require(bool condition, const std::string& message) {
  if (!condition) throw ConfigError(message);
}

}  // namespace riccatitron
