#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>
#include <vector>

namespace matchbandits {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// N x K real matrix; entry (i, j) is player i's utility for arm j in one round.
using UtilityMatrix = Matrix;

/// K x d real matrix; row j is the context vector of arm j in one round.
using ContextSet = Matrix;

inline constexpr int kUnmatched = -1;

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

/// Raised by the brute-force oracles when a market is too large to enumerate.
class EnumerationLimitError : public Error {
 public:
  using Error::Error;
};

class NumericalError : public Error {
 public:
  using Error::Error;
};

/// Configuration problem; `path` points at the offending field, e.g. "policies[1].delta1".
class ConfigError : public Error {
 public:
  ConfigError(std::string path, const std::string& message)
      : Error(path.empty() ? message : path + ": " + message), path_(std::move(path)) {}

  const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
};

}  // namespace matchbandits
