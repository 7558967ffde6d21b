#pragma once

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include <complex>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

/// Shared vocabulary types and error hierarchy.
namespace ircloud {

using Vec3 = Eigen::Vector3d;
using cplx = std::complex<double>;

/// Vector over a FockBasis (index = 2 * photon_configuration + spin).
using StateVector = Eigen::VectorXcd;
/// Sparse operator over a FockBasis.
using SparseOperator = Eigen::SparseMatrix<cplx, Eigen::ColMajor, std::ptrdiff_t>;

inline constexpr double kPi = 3.14159265358979323846;
/// Radius of the ball of admissible electron momenta.
inline constexpr double kMaxMomentum = 1.0 / 3.0;
/// Default upper bound on the fine-structure coupling.
inline constexpr double kDefaultAlphaMax = 0.01;

enum class Helicity : int { plus = 0, minus = 1 };

inline constexpr int helicity_index(Helicity h) { return static_cast<int>(h); }
inline constexpr const char* to_string(Helicity h) { return h == Helicity::plus ? "+" : "-"; }

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Argument outside the mathematical domain of an operation.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// An integral or expectation that is infinite for the requested parameters.
class DivergenceError : public Error {
 public:
  using Error::Error;
};

/// Occupation-number truncation lost more norm than allowed.
class TruncationError : public Error {
 public:
  TruncationError(const std::string& what, double defect) : Error(what), defect_(defect) {}
  double defect() const noexcept { return defect_; }

 private:
  double defect_;
};

/// Requested problem exceeds a configured size cap.
class ResourceError : public Error {
 public:
  using Error::Error;
};

/// Too few data points for a fit or verdict.
class InsufficientDataError : public Error {
 public:
  using Error::Error;
};

/// Iterative solver did not reach its tolerance.
class SolverError : public Error {
 public:
  SolverError(const std::string& what, std::vector<double> history)
      : Error(what), history_(std::move(history)) {}
  const std::vector<double>& residual_history() const noexcept { return history_; }

 private:
  std::vector<double> history_;
};

/// Invalid run configuration; `key` names the offending entry (section.key).
class ConfigError : public Error {
 public:
  ConfigError(std::string key, const std::string& what)
      : Error(key.empty() ? what : key + ": " + what), key_(std::move(key)) {}
  const std::string& key() const noexcept { return key_; }

 private:
  std::string key_;
};

}  // namespace ircloud
