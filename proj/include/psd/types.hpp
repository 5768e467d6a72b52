#pragma once

#include <complex>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace psd {

using Index = Eigen::Index;

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

template <typename Scalar>
using ComplexVector = Eigen::Matrix<std::complex<Scalar>, Eigen::Dynamic, 1>;

/// Raised when operand shapes are inconsistent with the operation.
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised when a basis fails the symplecticity test; carries the residual.
class NotSymplecticError : public std::domain_error {
 public:
  NotSymplecticError(const std::string& what, double residual)
      : std::domain_error(what + " (residual " + std::to_string(residual) + ")"),
        residual_(residual) {}
  double residual() const noexcept { return residual_; }

 private:
  double residual_;
};

/// Raised when a linear system is singular or numerically so.
class SingularSystemError : public std::runtime_error {
 public:
  SingularSystemError(const std::string& what, double rcond)
      : std::runtime_error(what + " (reciprocal condition " + std::to_string(rcond) + ")"),
        rcond_(rcond) {}
  double rcond() const noexcept { return rcond_; }

 private:
  double rcond_;
};

/// Raised when an iterative solve does not reach its tolerance.
class ConvergenceError : public std::runtime_error {
 public:
  ConvergenceError(const std::string& what, double residual)
      : std::runtime_error(what + " (residual " + std::to_string(residual) + ")"),
        residual_(residual) {}
  double residual() const noexcept { return residual_; }

 private:
  double residual_;
};

/// Raised when snapshot data cannot produce a basis (e.g. all zero).
class DegenerateDataError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Default tolerance for symplecticity and identity checks, relative to ||A||_F.
inline constexpr double kSymplecticTolerance = 1e-10;

}  // namespace psd
