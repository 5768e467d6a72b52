#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <utility>

#include <Eigen/LU>
#include <Eigen/QR>

#include "psd/model.hpp"
#include "psd/symplectic.hpp"
#include "psd/types.hpp"

namespace psd {

enum class Provenance { structure_preserving, variational, pod_galerkin };

/// A reduced system z' = Z(z) together with the maps between reduced and
/// full coordinates (x ~ lift * z, z0 = reduction * x0).
template <typename Scalar>
class ReducedModel {
 public:
  using VectorType = Vector<Scalar>;
  using MatrixType = Matrix<Scalar>;

  struct Parts {
    Provenance provenance = Provenance::structure_preserving;
    bool preserves_structure = false;
    MatrixType lift;
    MatrixType reduction;
    std::function<VectorType(const VectorType&)> field;
    std::function<Scalar(const VectorType&)> energy;
    std::optional<MatrixType> operator_matrix;
    std::optional<SymplecticBasis<Scalar>> basis;
    std::optional<ForcedHamiltonianModel<Scalar>> dynamics;
  };

  explicit ReducedModel(Parts parts) : parts_(std::move(parts)) {}

  Provenance provenance() const { return parts_.provenance; }
  bool preserves_structure() const { return parts_.preserves_structure; }
  Index dim() const { return parts_.lift.cols(); }
  Index full_dim() const { return parts_.lift.rows(); }

  VectorType field(const VectorType& z) const { return parts_.field(z); }
  /// Energy of the reconstructed state, H(lift z).
  Scalar energy(const VectorType& z) const { return parts_.energy(z); }

  VectorType lift(const VectorType& z) const { return parts_.lift * z; }
  VectorType reduce_state(const VectorType& x) const { return parts_.reduction * x; }
  const MatrixType& lift_matrix() const { return parts_.lift; }
  const MatrixType& reduction_matrix() const { return parts_.reduction; }

  bool is_linear() const { return parts_.operator_matrix.has_value(); }
  const MatrixType& operator_matrix() const {
    if (!parts_.operator_matrix) throw std::logic_error("ReducedModel: no linear operator");
    return *parts_.operator_matrix;
  }

  bool has_basis() const { return parts_.basis.has_value(); }
  const SymplecticBasis<Scalar>& basis() const {
    if (!parts_.basis) throw std::logic_error("ReducedModel: no symplectic basis");
    return *parts_.basis;
  }

  bool has_dynamics() const { return parts_.dynamics.has_value(); }
  /// Reduced forced Hamiltonian system (structure-preserving reductions only).
  const ForcedHamiltonianModel<Scalar>& dynamics() const {
    if (!parts_.dynamics) throw std::logic_error("ReducedModel: not a forced Hamiltonian system");
    return *parts_.dynamics;
  }

 private:
  Parts parts_;
};

namespace detail {

template <typename Scalar>
void require_half_dim(const ForcedHamiltonianModel<Scalar>& model, Index n, const char* what) {
  if (model.half_dim() != n) throw DimensionError(std::string(what) + ": dimension mismatch");
}

}  // namespace detail

/// Structure-preserving projection:
///   H~(z) = H(Az),  grad H~(z) = A^T grad H(Az),  f~(z) = A_qq^T f_H(Az),
///   z' = s * J_2k * grad H~(z) + (0; f~(z)).
/// Linear models additionally get K~ = A^+ K A and L~ = A^+ L A.
template <typename Scalar>
ReducedModel<Scalar> reduce_structure_preserving(const ForcedHamiltonianModel<Scalar>& model,
                                                 const SymplecticBasis<Scalar>& basis) {
  using VectorType = Vector<Scalar>;
  using MatrixType = Matrix<Scalar>;
  detail::require_half_dim(model, basis.full_half_dim(), "reduce_structure_preserving");
  const Index n = basis.full_half_dim();
  const Index k = basis.reduced_half_dim();

  auto H = model.hamiltonian_fn();
  auto grad = model.gradient_fn();
  auto force = model.force_fn();
  auto reduced_h = [basis, H](const VectorType& z) { return H(basis.lift(z)); };
  auto reduced_grad = [basis, grad, n, k](const VectorType& z) -> VectorType {
    const VectorType g = grad(basis.lift(z));
    VectorType out(2 * k);
    out.head(k) = basis.qq().transpose() * g.head(n) + basis.pq().transpose() * g.tail(n);
    out.tail(k) = basis.pp().transpose() * g.tail(n);
    return out;
  };
  auto reduced_force = [basis, force](const VectorType& z) -> VectorType {
    return basis.qq().transpose() * force(basis.lift(z));
  };

  typename ReducedModel<Scalar>::Parts parts;
  parts.provenance = Provenance::structure_preserving;
  parts.preserves_structure = true;
  parts.lift = basis.matrix();
  parts.reduction = basis.inverse_matrix();
  parts.basis = basis;

  std::optional<LinearForm<Scalar>> reduced_form;
  if (model.is_linear()) {
    const auto& form = model.linear_form();
    LinearForm<Scalar> r;
    r.K = basis.project(form.K * parts.lift);
    r.L = basis.project(form.L * parts.lift);
    r.energy_hessian = parts.lift.transpose() * form.energy_hessian * parts.lift;
    parts.operator_matrix = r.K + r.L;
    reduced_form = std::move(r);
  }
  parts.dynamics.emplace(k, reduced_h, reduced_grad, reduced_force, model.structure_scale(),
                         reduced_form);
  if (reduced_form) {
    const MatrixType S = reduced_form->energy_hessian;
    parts.energy = [S](const VectorType& z) { return Scalar(0.5) * z.dot(S * z); };
    const MatrixType op = *parts.operator_matrix;
    parts.field = [op](const VectorType& z) -> VectorType { return op * z; };
  } else {
    parts.energy = reduced_h;
    const auto dyn = *parts.dynamics;
    parts.field = [dyn](const VectorType& z) { return dyn.vector_field(z); };
  }
  return ReducedModel<Scalar>(std::move(parts));
}

/// The matrix M of the variational reduction, assembled from the blocks of a
/// general 2n x 2k matrix A:
///   M = [[A_pq^T A_qq - A_qq^T A_pq,  A_pq^T A_qp - A_qq^T A_pp],
///        [A_pp^T A_qq - A_qp^T A_pq,  A_pp^T A_qp - A_qp^T A_pp]].
/// For symplectic A with A_qp = 0 this is J_2k^T, so M^{-1} = J_2k.
template <typename Derived>
Matrix<typename Derived::Scalar> variational_matrix(const Eigen::MatrixBase<Derived>& a) {
  using Scalar = typename Derived::Scalar;
  if (a.rows() % 2 != 0 || a.cols() % 2 != 0 || a.cols() > a.rows())
    throw DimensionError("variational_matrix: A must be 2n x 2k with k <= n");
  const Index n = a.rows() / 2, k = a.cols() / 2;
  const Matrix<Scalar> qq = a.topLeftCorner(n, k), qp = a.topRightCorner(n, k);
  const Matrix<Scalar> pq = a.bottomLeftCorner(n, k), pp = a.bottomRightCorner(n, k);
  Matrix<Scalar> m(2 * k, 2 * k);
  m.topLeftCorner(k, k) = pq.transpose() * qq - qq.transpose() * pq;
  m.topRightCorner(k, k) = pq.transpose() * qp - qq.transpose() * pp;
  m.bottomLeftCorner(k, k) = pp.transpose() * qq - qp.transpose() * pq;
  m.bottomRightCorner(k, k) = pp.transpose() * qp - qp.transpose() * pp;
  return m;
}

/// Reduction by the variational principle for a general basis A:
///   z' = M^{-1} (s * grad H~(z)) - M^{-1} [A_qq^T f~(z); A_qp^T f~(z)].
template <typename Scalar>
ReducedModel<Scalar> reduce_variational(const ForcedHamiltonianModel<Scalar>& model,
                                        const Matrix<Scalar>& a,
                                        Scalar rel_tol = Scalar(kSymplecticTolerance)) {
  using VectorType = Vector<Scalar>;
  using MatrixType = Matrix<Scalar>;
  const MatrixType m = variational_matrix(a);
  const Index n = a.rows() / 2, k = a.cols() / 2;
  detail::require_half_dim(model, n, "reduce_variational");

  Eigen::PartialPivLU<MatrixType> lu(m);
  const Scalar rcond = lu.rcond();
  if (!(rcond > Scalar(100) * std::numeric_limits<Scalar>::epsilon()))
    throw SingularSystemError("reduce_variational: M is singular", static_cast<double>(rcond));
  const MatrixType m_inv = lu.inverse();

  const MatrixType qq = a.topLeftCorner(n, k), qp = a.topRightCorner(n, k);
  const Scalar scale = model.structure_scale();
  auto grad = model.gradient_fn();
  auto force = model.force_fn();
  auto field = [a, m_inv, qq, qp, scale, grad, force, k](const VectorType& z) -> VectorType {
    const VectorType x = a * z;
    const VectorType f = force(x);
    VectorType rhs = scale * (a.transpose() * grad(x));
    rhs.head(k) -= qq.transpose() * f;
    rhs.tail(k) -= qp.transpose() * f;
    return m_inv * rhs;
  };

  const Scalar tol = rel_tol * std::max(Scalar(1), Scalar(a.norm()));
  const bool symplectic = is_symplectic(a, tol).symplectic;
  typename ReducedModel<Scalar>::Parts parts;
  parts.provenance = Provenance::variational;
  parts.preserves_structure = symplectic && qp.norm() <= tol;
  parts.lift = a;
  parts.reduction = symplectic ? symplectic_inverse(a, rel_tol)
                              : MatrixType(a.completeOrthogonalDecomposition().pseudoInverse());
  parts.field = field;
  auto H = model.hamiltonian_fn();
  parts.energy = [a, H](const VectorType& z) { return H(a * z); };
  if (model.is_linear()) {
    const auto& form = model.linear_form();
    const MatrixType F = form.L.bottomRows(n);
    MatrixType rhs = scale * (a.transpose() * form.energy_hessian * a);
    rhs.topRows(k) -= qq.transpose() * F * a;
    rhs.bottomRows(k) -= qp.transpose() * F * a;
    parts.operator_matrix = m_inv * rhs;
  }
  return ReducedModel<Scalar>(std::move(parts));
}

/// POD-Galerkin: z' = Phi^T X(Phi z); for linear models the operator
/// Phi^T K Phi + Phi^T L Phi.
template <typename Scalar>
ReducedModel<Scalar> reduce_pod_galerkin(const ForcedHamiltonianModel<Scalar>& model,
                                         const Matrix<Scalar>& phi,
                                         Scalar rel_tol = Scalar(kSymplecticTolerance)) {
  using VectorType = Vector<Scalar>;
  using MatrixType = Matrix<Scalar>;
  if (phi.rows() != model.state_dim() || phi.cols() < 1 || phi.cols() > phi.rows())
    throw DimensionError("reduce_pod_galerkin: Phi must be 2n x k with 1 <= k <= 2n");
  const Scalar ortho = (phi.transpose() * phi - MatrixType::Identity(phi.cols(), phi.cols())).norm();
  if (!(ortho <= rel_tol * std::max(Scalar(1), Scalar(phi.norm()))))
    throw std::invalid_argument("reduce_pod_galerkin: Phi is not orthonormal (residual " +
                                std::to_string(static_cast<double>(ortho)) + ")");

  typename ReducedModel<Scalar>::Parts parts;
  parts.provenance = Provenance::pod_galerkin;
  parts.preserves_structure = false;
  parts.lift = phi;
  parts.reduction = phi.transpose();
  if (model.is_linear()) {
    const auto& form = model.linear_form();
    const MatrixType op = phi.transpose() * form.K * phi + phi.transpose() * form.L * phi;
    const MatrixType S = phi.transpose() * form.energy_hessian * phi;
    parts.operator_matrix = op;
    parts.field = [op](const VectorType& z) -> VectorType { return op * z; };
    parts.energy = [S](const VectorType& z) { return Scalar(0.5) * z.dot(S * z); };
  } else {
    parts.field = [model, phi](const VectorType& z) -> VectorType {
      return phi.transpose() * model.vector_field(phi * z);
    };
    auto H = model.hamiltonian_fn();
    parts.energy = [phi, H](const VectorType& z) { return H(phi * z); };
  }
  return ReducedModel<Scalar>(std::move(parts));
}

/// dH . X_F at x, evaluated as <f_H(x), grad_p H(x)>.
template <typename Scalar>
Scalar energy_rate(const ForcedHamiltonianModel<Scalar>& model, const Vector<Scalar>& x) {
  const Index n = model.half_dim();
  return model.force(x).dot(model.gradient(x).tail(n));
}

/// The same rate through the symplectic form, Omega(X_H, X_F) / s.
template <typename Scalar>
Scalar energy_rate_symplectic(const ForcedHamiltonianModel<Scalar>& model,
                              const Vector<Scalar>& x) {
  return symplectic_form(model.hamiltonian_field(x), model.force_field(x)) /
         model.structure_scale();
}

template <typename Scalar>
struct EnergyRateReport {
  Scalar full_rate = 0;     // dH . X_F at Az
  Scalar reduced_rate = 0;  // dH~ . X_F~ at z
  Scalar discrepancy = 0;
  Scalar bound = 0;         // ||grad H(Az)|| * ||f - A_pp A_qq^T f||
  bool within_bound = false;
};

/// Compares full and reduced energy rates at x = Az against the
/// reconstruction bound ||X_H|| * ||f_H - A_pp A_qq^T f_H||, where ||X_H|| is
/// taken in the unscaled Poisson structure (||X_H|| / s).
template <typename Scalar>
EnergyRateReport<Scalar> energy_rate_preservation_report(
    const ForcedHamiltonianModel<Scalar>& model, const SymplecticBasis<Scalar>& basis,
    const Vector<Scalar>& z, Scalar slack = Scalar(1e-10)) {
  detail::require_half_dim(model, basis.full_half_dim(), "energy_rate_preservation_report");
  if (z.size() != 2 * basis.reduced_half_dim())
    throw DimensionError("energy_rate_preservation_report: z must have length 2k");
  const Index n = basis.full_half_dim();
  const Vector<Scalar> x = basis.lift(z);
  const Vector<Scalar> g = model.gradient(x);
  const Vector<Scalar> f = model.force(x);
  const Vector<Scalar> reduced_force = basis.qq().transpose() * f;
  const Vector<Scalar> reduced_grad_p = basis.pp().transpose() * g.tail(n);

  EnergyRateReport<Scalar> r;
  r.full_rate = f.dot(g.tail(n));
  r.reduced_rate = reduced_force.dot(reduced_grad_p);
  r.discrepancy = std::abs(r.full_rate - r.reduced_rate);
  const Scalar field_norm = model.hamiltonian_field(x).norm() / model.structure_scale();
  r.bound = field_norm * (f - basis.pp() * reduced_force).norm();
  r.within_bound = r.discrepancy <= r.bound + slack;
  return r;
}

}  // namespace psd
