#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <utility>
#include <vector>

#include <Eigen/SVD>

#include "psd/symplectic.hpp"
#include "psd/types.hpp"

namespace psd {

/// Column-stacked phase-space snapshots x(t_i) = (q(t_i); p(t_i)) with
/// optional force samples f_H(x(t_i)).
template <typename Scalar>
class SnapshotEnsemble {
 public:
  SnapshotEnsemble(Matrix<Scalar> states, std::vector<Scalar> times,
                   std::optional<Matrix<Scalar>> forces = std::nullopt)
      : states_(std::move(states)), times_(std::move(times)), forces_(std::move(forces)) {
    if (states_.rows() < 2 || states_.rows() % 2 != 0)
      throw DimensionError("SnapshotEnsemble: state columns must have even length 2n");
    if (static_cast<Index>(times_.size()) != states_.cols())
      throw DimensionError("SnapshotEnsemble: one sample time per state column required");
    for (std::size_t i = 1; i < times_.size(); ++i)
      if (!(times_[i] > times_[i - 1]))
        throw std::invalid_argument("SnapshotEnsemble: sample times must be strictly increasing");
    if (forces_ && (forces_->rows() != half_dim() || forces_->cols() != states_.cols()))
      throw DimensionError("SnapshotEnsemble: force columns must be n x N");
  }

  Index half_dim() const { return states_.rows() / 2; }
  Index size() const { return states_.cols(); }
  bool empty() const { return states_.cols() == 0; }
  bool has_forces() const { return forces_.has_value(); }

  const Matrix<Scalar>& states() const { return states_; }
  const std::vector<Scalar>& times() const { return times_; }
  const Matrix<Scalar>& forces() const {
    if (!forces_) throw std::logic_error("SnapshotEnsemble: no force data");
    return *forces_;
  }

  auto q() const { return states_.topRows(half_dim()); }
  auto p() const { return states_.bottomRows(half_dim()); }

 private:
  Matrix<Scalar> states_;
  std::vector<Scalar> times_;
  std::optional<Matrix<Scalar>> forces_;
};

enum class SpectrumSource { pod_state, cotangent, cotangent_energy };

/// Singular values in nonincreasing order.
template <typename Scalar>
struct SingularSpectrum {
  Vector<Scalar> values;
  SpectrumSource source = SpectrumSource::pod_state;

  /// sqrt(sum_{i > k} lambda_i^2), with 1-based i.
  Scalar tail_norm(Index k) const {
    if (k >= values.size()) return Scalar(0);
    return values.tail(values.size() - k).norm();
  }
};

template <typename Scalar>
struct PodResult {
  Matrix<Scalar> basis;  // d x k, orthonormal columns
  SingularSpectrum<Scalar> spectrum;
};

template <typename Scalar>
struct CotangentLiftResult {
  SymplecticBasis<Scalar> basis;
  SingularSpectrum<Scalar> spectrum;
};

namespace detail {

inline void require_nonempty(Index n_snapshots) {
  if (n_snapshots < 1) throw DimensionError("snapshot ensemble is empty");
}

/// Flip each column so its first non-negligible entry is nonnegative.
template <typename Scalar>
void normalize_signs(Matrix<Scalar>& u) {
  for (Index j = 0; j < u.cols(); ++j) {
    const Scalar cutoff = u.col(j).cwiseAbs().maxCoeff() * Scalar(1e-8);
    for (Index i = 0; i < u.rows(); ++i) {
      if (std::abs(u(i, j)) > cutoff) {
        if (u(i, j) < 0) u.col(j) = -u.col(j);
        break;
      }
    }
  }
}

}  // namespace detail

/// M_x = [x(t_1), ..., x(t_N)] (2n x N).
template <typename Scalar>
Matrix<Scalar> build_state_matrix(const SnapshotEnsemble<Scalar>& ens) {
  detail::require_nonempty(ens.size());
  return ens.states();
}

/// M_qp = [q(t_1) ... q(t_N), p(t_1) ... p(t_N)] (n x 2N).
template <typename Scalar>
Matrix<Scalar> build_extended_matrix(const SnapshotEnsemble<Scalar>& ens) {
  detail::require_nonempty(ens.size());
  const Index n = ens.half_dim(), N = ens.size();
  Matrix<Scalar> m(n, 2 * N);
  m.leftCols(N) = ens.q();
  m.rightCols(N) = ens.p();
  return m;
}

/// M_qpf = [Q, P, gamma * F] (n x 3N). gamma weights the force block.
template <typename Scalar>
Matrix<Scalar> build_energy_matrix(const SnapshotEnsemble<Scalar>& ens, Scalar gamma = Scalar(1)) {
  detail::require_nonempty(ens.size());
  if (!ens.has_forces())
    throw std::invalid_argument("build_energy_matrix: ensemble carries no force data");
  const Index n = ens.half_dim(), N = ens.size();
  Matrix<Scalar> m(n, 3 * N);
  m.leftCols(N) = ens.q();
  m.middleCols(N, N) = ens.p();
  m.rightCols(N) = gamma * ens.forces();
  return m;
}

template <typename Derived>
SingularSpectrum<typename Derived::Scalar> singular_spectrum(
    const Eigen::MatrixBase<Derived>& m, SpectrumSource source = SpectrumSource::pod_state) {
  using Scalar = typename Derived::Scalar;
  Eigen::BDCSVD<Matrix<Scalar>> svd(m.eval());
  return {svd.singularValues(), source};
}

/// Leading k left singular vectors of M with the full singular spectrum.
template <typename Derived>
PodResult<typename Derived::Scalar> pod_basis(const Eigen::MatrixBase<Derived>& m, Index k,
                                             SpectrumSource source = SpectrumSource::pod_state) {
  using Scalar = typename Derived::Scalar;
  if (k < 1 || k > std::min(m.rows(), m.cols()))
    throw DimensionError("pod_basis: require 1 <= k <= min(rows, cols)");
  Eigen::BDCSVD<Matrix<Scalar>> svd(m.eval(), Eigen::ComputeThinU);
  Matrix<Scalar> u = svd.matrixU().leftCols(k);
  detail::normalize_signs(u);
  return {std::move(u), {svd.singularValues(), source}};
}

namespace detail {

template <typename Scalar>
CotangentLiftResult<Scalar> lift_from_matrix(const Matrix<Scalar>& m, Index k,
                                             SpectrumSource source) {
  if (k < 1 || k > std::min(m.rows(), m.cols()))
    throw DimensionError("cotangent lift: require 1 <= k <= min(n, columns)");
  if (m.cwiseAbs().maxCoeff() == Scalar(0))
    throw DegenerateDataError("cotangent lift: snapshot data is identically zero");
  auto pod = pod_basis(m, k, source);
  return {SymplecticBasis<Scalar>::cotangent_lift(pod.basis), std::move(pod.spectrum)};
}

}  // namespace detail

/// PSD by cotangent lift: A = diag(Phi, Phi), Phi from the SVD of M_qp.
template <typename Scalar>
CotangentLiftResult<Scalar> cotangent_lift(const SnapshotEnsemble<Scalar>& ens, Index k) {
  return detail::lift_from_matrix(build_extended_matrix(ens), k, SpectrumSource::cotangent);
}

/// Cotangent lift of the force-augmented ensemble M_qpf.
template <typename Scalar>
CotangentLiftResult<Scalar> cotangent_lift_energy(const SnapshotEnsemble<Scalar>& ens, Index k,
                                                  Scalar gamma = Scalar(1)) {
  return detail::lift_from_matrix(build_energy_matrix(ens, gamma), k,
                                  SpectrumSource::cotangent_energy);
}

/// ||M - A A^+ M||_F
template <typename Derived, typename Scalar = typename Derived::Scalar>
Scalar projection_error(const Eigen::MatrixBase<Derived>& m,
                        const SymplecticBasis<Scalar>& basis) {
  if (m.rows() != 2 * basis.full_half_dim())
    throw DimensionError("projection_error: row count must equal 2n");
  return (m - basis.lift(basis.project(m))).norm();
}

template <typename Scalar>
struct ErrorOrderingReport {
  Index k = 0;
  Scalar cot_2k = 0;             // E_COT^(2k): tail of M_qp spectrum after k
  Scalar cot_4k = 0;             // E_COT^(4k): tail after 2k
  Scalar pod_2k = 0;             // POD with 2k modes: tail of M_x spectrum after 2k
  Scalar pod_k_indexed = 0;      // tail of M_x spectrum after k
  bool lower_bound_holds = false;  // cot_4k / 2 <= pod_2k
  bool upper_bound_holds = false;  // pod_2k <= cot_2k
  bool k_indexed_lower_holds = false;  // cot_4k / 2 <= pod_k_indexed

  bool chain_holds() const { return lower_bound_holds && upper_bound_holds; }
};

/// Compares cotangent-lift and POD truncation errors on one ensemble.
/// Both POD conventions are reported; nothing is asserted.
template <typename Scalar>
ErrorOrderingReport<Scalar> error_ordering_report(const SnapshotEnsemble<Scalar>& ens, Index k,
                                                  Scalar slack = Scalar(1e-10)) {
  detail::require_nonempty(ens.size());
  const Index n = ens.half_dim(), N = ens.size();
  if (k < 1 || 2 * k > std::min(2 * n, N) || 2 * k > std::min(n, 2 * N))
    throw DimensionError("error_ordering_report: k infeasible for this ensemble");
  const auto lambda = singular_spectrum(build_extended_matrix(ens), SpectrumSource::cotangent);
  const auto sigma = singular_spectrum(build_state_matrix(ens), SpectrumSource::pod_state);

  ErrorOrderingReport<Scalar> r;
  r.k = k;
  r.cot_2k = lambda.tail_norm(k);
  r.cot_4k = lambda.tail_norm(2 * k);
  r.pod_2k = sigma.tail_norm(2 * k);
  r.pod_k_indexed = sigma.tail_norm(k);
  r.lower_bound_holds = r.cot_4k / 2 <= r.pod_2k + slack;
  r.upper_bound_holds = r.pod_2k <= r.cot_2k + slack;
  r.k_indexed_lower_holds = r.cot_4k / 2 <= r.pod_k_indexed + slack;
  return r;
}

}  // namespace psd
