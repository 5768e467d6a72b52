#pragma once

#include <functional>
#include <optional>
#include <utility>

#include "psd/symplectic.hpp"
#include "psd/types.hpp"

namespace psd {

/// Matrix form of a linear forced Hamiltonian system y' = K y + L y with
/// H(y) = 1/2 y^T S y.
template <typename Scalar>
struct LinearForm {
  Matrix<Scalar> K;               // Hamiltonian part, s * J * S
  Matrix<Scalar> L;               // vertical part, [[0, 0], [F_q, F_p]]
  Matrix<Scalar> energy_hessian;  // S, symmetric positive semidefinite

  Matrix<Scalar> operator_matrix() const { return K + L; }
};

/// Evaluator bundle for x' = X_H(x) + X_F(x), with
///   X_H(x) = s * J_2n * grad H(x),   X_F(x) = (0; f_H(x)).
///
/// `s` is the structure scale: 1 for canonical systems, 1/dx for the
/// finite-difference wave model whose Poisson matrix is J_2n / dx.
template <typename Scalar>
class ForcedHamiltonianModel {
 public:
  using VectorType = Vector<Scalar>;
  using ScalarFn = std::function<Scalar(const VectorType&)>;
  using VectorFn = std::function<VectorType(const VectorType&)>;

  ForcedHamiltonianModel(Index half_dim, ScalarFn hamiltonian, VectorFn gradient, VectorFn force,
                         Scalar structure_scale = Scalar(1),
                         std::optional<LinearForm<Scalar>> linear = std::nullopt)
      : half_dim_(half_dim),
        hamiltonian_(std::move(hamiltonian)),
        gradient_(std::move(gradient)),
        force_(std::move(force)),
        scale_(structure_scale),
        linear_(std::move(linear)) {
    if (half_dim_ < 1) throw DimensionError("ForcedHamiltonianModel: half_dim must be >= 1");
    if (linear_) {
      const Index d = 2 * half_dim_;
      if (linear_->K.rows() != d || linear_->K.cols() != d || linear_->L.rows() != d ||
          linear_->L.cols() != d || linear_->energy_hessian.rows() != d ||
          linear_->energy_hessian.cols() != d)
        throw DimensionError("ForcedHamiltonianModel: linear form must be 2n x 2n");
    }
  }

  /// H(x) = 1/2 x^T S x, f_H(x) = F x with F an n x 2n matrix.
  static ForcedHamiltonianModel linear(const Matrix<Scalar>& hessian,
                                       const Matrix<Scalar>& force_matrix,
                                       Scalar structure_scale = Scalar(1)) {
    const Index d = hessian.rows();
    if (d % 2 != 0 || hessian.cols() != d)
      throw DimensionError("ForcedHamiltonianModel::linear: hessian must be 2n x 2n");
    const Index n = d / 2;
    if (force_matrix.rows() != n || force_matrix.cols() != d)
      throw DimensionError("ForcedHamiltonianModel::linear: force matrix must be n x 2n");
    LinearForm<Scalar> form;
    form.energy_hessian = hessian;
    form.K = structure_scale * apply_poisson(hessian);
    form.L = Matrix<Scalar>::Zero(d, d);
    form.L.bottomRows(n) = force_matrix;
    return ForcedHamiltonianModel(
        n, [hessian](const VectorType& x) { return Scalar(0.5) * x.dot(hessian * x); },
        [hessian](const VectorType& x) -> VectorType { return hessian * x; },
        [force_matrix](const VectorType& x) -> VectorType { return force_matrix * x; },
        structure_scale, std::move(form));
  }

  Index half_dim() const { return half_dim_; }
  Index state_dim() const { return 2 * half_dim_; }
  Scalar structure_scale() const { return scale_; }

  Scalar hamiltonian(const VectorType& x) const { return hamiltonian_(x); }
  VectorType gradient(const VectorType& x) const { return gradient_(x); }
  VectorType force(const VectorType& x) const { return force_(x); }

  /// s * J * grad H(x)
  VectorType hamiltonian_field(const VectorType& x) const {
    return scale_ * apply_poisson(gradient_(x));
  }

  /// (0; f_H(x))
  VectorType force_field(const VectorType& x) const {
    VectorType out = VectorType::Zero(state_dim());
    out.tail(half_dim_) = force_(x);
    return out;
  }

  VectorType vector_field(const VectorType& x) const {
    return hamiltonian_field(x) + force_field(x);
  }

  bool is_linear() const { return linear_.has_value(); }
  const LinearForm<Scalar>& linear_form() const {
    if (!linear_) throw std::logic_error("ForcedHamiltonianModel: model has no linear form");
    return *linear_;
  }

  const ScalarFn& hamiltonian_fn() const { return hamiltonian_; }
  const VectorFn& gradient_fn() const { return gradient_; }
  const VectorFn& force_fn() const { return force_; }

 private:
  Index half_dim_;
  ScalarFn hamiltonian_;
  VectorFn gradient_;
  VectorFn force_;
  Scalar scale_;
  std::optional<LinearForm<Scalar>> linear_;
};

}  // namespace psd
