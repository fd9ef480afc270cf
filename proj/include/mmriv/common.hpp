#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace mmriv {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Caller passed something malformed (dimension mismatch, empty input,
/// invalid parameter). Maps to CLI exit code 1.
class InputError : public std::invalid_argument {
 public:
  explicit InputError(const std::string& msg) : std::invalid_argument(msg) {}
};

/// A numerical procedure failed (factorization breakdown, degenerate
/// subset, divergence). Maps to CLI exit code 2.
class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string& msg) : std::runtime_error(msg) {}
};

inline void require(bool cond, const std::string& msg) {
  if (!cond) throw InputError(msg);
}

}  // namespace mmriv
