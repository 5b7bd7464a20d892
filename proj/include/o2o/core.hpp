#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>

namespace o2o {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

#ifdef O2O_VERSION
inline constexpr const char* kVersion = O2O_VERSION;
#else
inline constexpr const char* kVersion = "0.0.0";
#endif

/// A (state, action, stage) index triple. Stages are 0-based internally.
struct Triple {
  std::size_t s = 0;
  std::size_t a = 0;
  std::size_t h = 0;

  friend bool operator==(const Triple&, const Triple&) = default;
  friend auto operator<=>(const Triple&, const Triple&) = default;
};

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed document. `path()` is a JSON-pointer-like location of the bad field.
class SchemaError : public Error {
 public:
  SchemaError(std::string path, const std::string& what)
      : Error(path + ": " + what), path_(std::move(path)) {}
  const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// Neither shift direction keeps a planted reference value inside [0, H].
class InfeasibleGap : public Error {
 public:
  using Error::Error;
};

/// Raised when an exact-mismatch quantity is requested for a noisy reference.
class MisspecifiedInput : public Error {
 public:
  using Error::Error;
};

/// A modelling hypothesis (probability validity, eps <= zeta*H, ...) does not hold.
class HypothesisViolation : public Error {
 public:
  using Error::Error;
};

class NumericalDegeneracy : public Error {
 public:
  using Error::Error;
};

}  // namespace o2o
