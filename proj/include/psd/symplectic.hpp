#pragma once

#include <algorithm>
#include <cmath>
#include <string>

#include "psd/types.hpp"

namespace psd {

/// Dense Poisson matrix J_2n = [[0, I], [-I, 0]].
template <typename Scalar = double>
Matrix<Scalar> poisson_matrix(Index n) {
  if (n < 1) throw DimensionError("poisson_matrix: half dimension must be >= 1");
  Matrix<Scalar> J = Matrix<Scalar>::Zero(2 * n, 2 * n);
  J.topRightCorner(n, n).setIdentity();
  J.bottomLeftCorner(n, n) = -Matrix<Scalar>::Identity(n, n);
  return J;
}

/// J_2n * X without forming J_2n. X must have an even number of rows.
template <typename Derived>
Matrix<typename Derived::Scalar> apply_poisson(const Eigen::MatrixBase<Derived>& x) {
  const Index rows = x.rows();
  if (rows % 2 != 0) throw DimensionError("apply_poisson: odd row count");
  const Index n = rows / 2;
  Matrix<typename Derived::Scalar> out(rows, x.cols());
  out.topRows(n) = x.bottomRows(n);
  out.bottomRows(n) = -x.topRows(n);
  return out;
}

/// Omega(u, v) = u^T J_2n v.
template <typename DerivedU, typename DerivedV>
typename DerivedU::Scalar symplectic_form(const Eigen::MatrixBase<DerivedU>& u,
                                          const Eigen::MatrixBase<DerivedV>& v) {
  if (u.size() != v.size() || u.size() % 2 != 0)
    throw DimensionError("symplectic_form: vectors must share an even length");
  const Index n = u.size() / 2;
  return u.head(n).dot(v.tail(n)) - u.tail(n).dot(v.head(n));
}

template <typename Scalar>
struct SymplecticCheck {
  bool symplectic = false;
  Scalar residual = 0;  // ||A^T J_2n A - J_2k||_F
};

template <typename Derived>
typename Derived::Scalar symplecticity_residual(const Eigen::MatrixBase<Derived>& a) {
  using Scalar = typename Derived::Scalar;
  if (a.rows() % 2 != 0 || a.cols() % 2 != 0)
    throw DimensionError("symplecticity_residual: A must be 2n x 2k");
  if (a.cols() > a.rows()) throw DimensionError("symplecticity_residual: requires 2k <= 2n");
  const Matrix<Scalar> gram = a.transpose() * apply_poisson(a);
  return (gram - poisson_matrix<Scalar>(a.cols() / 2)).norm();
}

/// True iff ||A^T J_2n A - J_2k||_F <= tol. The residual is always returned.
template <typename Derived>
SymplecticCheck<typename Derived::Scalar> is_symplectic(const Eigen::MatrixBase<Derived>& a,
                                                        typename Derived::Scalar tol) {
  if (!a.allFinite()) throw DimensionError("is_symplectic: A has non-finite entries");
  const auto residual = symplecticity_residual(a);
  return {residual <= tol, residual};
}

enum class BasisKind { cotangent_lift, general };

/// A 2n x 2k symplectic basis with A_qp = 0 enforced by construction.
///
///   A = [[A_qq, 0   ],
///        [A_pq, A_pp]]
///
/// Only the three nonzero n x k blocks are stored. Instances are validated
/// on construction and immutable afterwards.
template <typename Scalar>
class SymplecticBasis {
 public:
  using MatrixType = Matrix<Scalar>;

  /// Validates the block criterion A_qq^T A_pq symmetric, A_qq^T A_pp = I_k.
  static SymplecticBasis from_blocks(MatrixType a_qq, MatrixType a_pq, MatrixType a_pp,
                                     BasisKind kind = BasisKind::general,
                                     Scalar rel_tol = Scalar(kSymplecticTolerance)) {
    const Index n = a_qq.rows();
    const Index k = a_qq.cols();
    if (n < 1 || k < 1 || k > n) throw DimensionError("SymplecticBasis: require 1 <= k <= n");
    if (a_pq.rows() != n || a_pq.cols() != k || a_pp.rows() != n || a_pp.cols() != k)
      throw DimensionError("SymplecticBasis: blocks must all be n x k");
    SymplecticBasis basis(std::move(a_qq), std::move(a_pq), std::move(a_pp), kind);
    const Scalar scale = std::max(Scalar(1), basis.frobenius_norm());
    const Scalar block_residual =
        (basis.qq_.transpose() * basis.pq_ - basis.pq_.transpose() * basis.qq_).norm() +
        (basis.qq_.transpose() * basis.pp_ - MatrixType::Identity(k, k)).norm();
    const Scalar residual = basis.residual();
    if (!(block_residual <= rel_tol * scale) || !(residual <= rel_tol * scale))
      throw NotSymplecticError("SymplecticBasis: blocks violate A^T J A = J",
                               static_cast<double>(std::max(residual, block_residual)));
    return basis;
  }

  /// diag(Phi, Phi); requires Phi^T Phi = I_k.
  static SymplecticBasis cotangent_lift(const MatrixType& phi,
                                        Scalar rel_tol = Scalar(kSymplecticTolerance)) {
    return from_blocks(phi, MatrixType::Zero(phi.rows(), phi.cols()), phi,
                       BasisKind::cotangent_lift, rel_tol);
  }

  Index full_half_dim() const { return qq_.rows(); }
  Index reduced_half_dim() const { return qq_.cols(); }
  BasisKind kind() const { return kind_; }

  const MatrixType& qq() const { return qq_; }
  const MatrixType& pq() const { return pq_; }
  const MatrixType& pp() const { return pp_; }

  /// Dense 2n x 2k form.
  MatrixType matrix() const {
    const Index n = full_half_dim(), k = reduced_half_dim();
    MatrixType a = MatrixType::Zero(2 * n, 2 * k);
    a.topLeftCorner(n, k) = qq_;
    a.bottomLeftCorner(n, k) = pq_;
    a.bottomRightCorner(n, k) = pp_;
    return a;
  }

  /// Dense A^+ = J_2k^T A^T J_2n = [[A_pp^T, 0], [-A_pq^T, A_qq^T]].
  MatrixType inverse_matrix() const {
    const Index n = full_half_dim(), k = reduced_half_dim();
    MatrixType inv = MatrixType::Zero(2 * k, 2 * n);
    inv.topLeftCorner(k, n) = pp_.transpose();
    inv.bottomLeftCorner(k, n) = -pq_.transpose();
    inv.bottomRightCorner(k, n) = qq_.transpose();
    return inv;
  }

  /// x = A z, column-wise.
  template <typename Derived>
  MatrixType lift(const Eigen::MatrixBase<Derived>& z) const {
    const Index n = full_half_dim(), k = reduced_half_dim();
    if (z.rows() != 2 * k) throw DimensionError("SymplecticBasis::lift: expected 2k rows");
    MatrixType x(2 * n, z.cols());
    x.topRows(n) = qq_ * z.topRows(k);
    x.bottomRows(n) = pq_ * z.topRows(k) + pp_ * z.bottomRows(k);
    return x;
  }

  /// z = A^+ x, column-wise.
  template <typename Derived>
  MatrixType project(const Eigen::MatrixBase<Derived>& x) const {
    const Index n = full_half_dim(), k = reduced_half_dim();
    if (x.rows() != 2 * n) throw DimensionError("SymplecticBasis::project: expected 2n rows");
    MatrixType z(2 * k, x.cols());
    z.topRows(k) = pp_.transpose() * x.topRows(n);
    z.bottomRows(k) = qq_.transpose() * x.bottomRows(n) - pq_.transpose() * x.topRows(n);
    return z;
  }

  /// ||A^T J_2n A - J_2k||_F
  Scalar residual() const { return symplecticity_residual(matrix()); }

  Scalar frobenius_norm() const {
    return std::sqrt(qq_.squaredNorm() + pq_.squaredNorm() + pp_.squaredNorm());
  }

 private:
  SymplecticBasis(MatrixType a_qq, MatrixType a_pq, MatrixType a_pp, BasisKind kind)
      : qq_(std::move(a_qq)), pq_(std::move(a_pq)), pp_(std::move(a_pp)), kind_(kind) {}

  MatrixType qq_;
  MatrixType pq_;
  MatrixType pp_;
  BasisKind kind_;
};

/// A^+ for a validated basis.
template <typename Scalar>
Matrix<Scalar> symplectic_inverse(const SymplecticBasis<Scalar>& basis) {
  return basis.inverse_matrix();
}

/// A^+ for an arbitrary 2n x 2k matrix; rejects non-symplectic input.
template <typename Derived>
Matrix<typename Derived::Scalar> symplectic_inverse(
    const Eigen::MatrixBase<Derived>& a,
    typename Derived::Scalar rel_tol = typename Derived::Scalar(kSymplecticTolerance)) {
  using Scalar = typename Derived::Scalar;
  const auto check = is_symplectic(a, rel_tol * std::max(Scalar(1), Scalar(a.norm())));
  if (!check.symplectic)
    throw NotSymplecticError("symplectic_inverse: A is not symplectic",
                             static_cast<double>(check.residual));
  // J_2k^T A^T J_2n = J_2k (J_2n A)^T
  return poisson_matrix<Scalar>(a.cols() / 2) * apply_poisson(a).transpose();
}

/// P = A A^+; an (oblique) projector onto Range(A).
template <typename Scalar>
Matrix<Scalar> projector(const SymplecticBasis<Scalar>& basis) {
  return basis.lift(basis.inverse_matrix());
}

}  // namespace psd
