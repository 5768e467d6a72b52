#pragma once

#include <complex>
#include <limits>

#include <Eigen/Eigenvalues>

#include "psd/decomposition.hpp"
#include "psd/types.hpp"
#include "psd/wave.hpp"

namespace psd {

/// Stability summary of a reduced linear operator.
struct StabilityReport {
  Index basis_dim = 0;
  double beta = 0;
  std::complex<double> lambda_star;  // eigenvalue of maximal real part
  ComplexVector<double> xi_star;     // unit eigenvector, first nonzero entry real positive
  double a_star = 0;                 // |xi_*^T z0|
  bool stable = false;               // Re(lambda_*) < 0
  bool a_star_nonzero = false;
};

/// All eigenvalues of a square real matrix.
template <typename Derived>
ComplexVector<typename Derived::Scalar> reduced_spectrum(const Eigen::MatrixBase<Derived>& op) {
  using Scalar = typename Derived::Scalar;
  if (op.rows() != op.cols()) throw DimensionError("reduced_spectrum: operator must be square");
  if (!op.allFinite()) throw std::invalid_argument("reduced_spectrum: operator has non-finite entries");
  Eigen::EigenSolver<Matrix<Scalar>> es(op.eval(), false);
  if (es.info() != Eigen::Success) throw ConvergenceError("reduced_spectrum: eigensolver failed", 0);
  return es.eigenvalues();
}

/// Unit 2-norm with the first entry above 1e-12 * max |v_i| rotated to the positive real axis.
ComplexVector<double> normalize_eigenvector(const ComplexVector<double>& v);

/// Locates lambda_* of `op`, its eigenvector, and the coefficient a_* against z0.
StabilityReport analyze_operator(const Matrix<double>& op, const Vector<double>& z0, double beta,
                                 Index basis_dim);

/// POD-Galerkin operator Phi^T (K + L) Phi with Phi the leading k left
/// singular vectors of M_x. The ensemble must come from the same beta.
StabilityReport table2_cell(const wave::WaveParams& p, double beta, Index k,
                            const SnapshotEnsemble<double>& snapshots);

/// Structure-preserving operator A^+ (K + L) A with A the cotangent lift of
/// the ensemble using k modes (reduced dimension 2k).
StabilityReport psd_stability(const wave::WaveParams& p, Index k,
                              const SnapshotEnsemble<double>& snapshots);

}  // namespace psd
