#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <vector>

#include <Eigen/Eigenvalues>

#include "psd/decomposition.hpp"
#include "psd/integrator.hpp"
#include "psd/model.hpp"
#include "psd/types.hpp"

namespace psd::wave {

/// One-dimensional damped wave equation q_tt = c^2 q_xx - w0^2 q - beta q_t on a
/// periodic grid x_i = i * dx, i = 1..n.
struct WaveParams {
  double l = 1.0;
  Index n = 500;
  double dt = 0.01;
  double T = 50.0;
  double beta = 0.1;
  double omega0 = 0.05;
  double c = 0.1;
  double snapshot_interval = 0.5;

  double dx() const { return l / static_cast<double>(n); }
  /// Throws std::invalid_argument naming the offending field.
  void validate() const;
};

/// Periodic (1, -2, 1) / dx^2 stencil.
template <typename Scalar = double>
Matrix<Scalar> dxx_matrix(const WaveParams& p) {
  p.validate();
  const Index n = p.n;
  const Scalar dx = Scalar(p.l) / Scalar(n);
  const Scalar w = Scalar(1) / (dx * dx);
  Matrix<Scalar> d = Matrix<Scalar>::Zero(n, n);
  for (Index i = 0; i < n; ++i) {
    d(i, i) = -2 * w;
    d(i, (i + n - 1) % n) += w;
    d(i, (i + 1) % n) += w;
  }
  return d;
}

/// K = [[0, I], [c^2 D_xx - w0^2 I, 0]]
template <typename Scalar = double>
Matrix<Scalar> hamiltonian_operator(const WaveParams& p) {
  const Index n = p.n;
  const Scalar c = Scalar(p.c), w0 = Scalar(p.omega0);
  Matrix<Scalar> k = Matrix<Scalar>::Zero(2 * n, 2 * n);
  k.topRightCorner(n, n).setIdentity();
  k.bottomLeftCorner(n, n) = c * c * dxx_matrix<Scalar>(p);
  k.bottomLeftCorner(n, n).diagonal().array() -= w0 * w0;
  return k;
}

/// L = [[0, 0], [0, -beta I]]
template <typename Scalar = double>
Matrix<Scalar> damping_operator(const WaveParams& p) {
  p.validate();
  const Index n = p.n;
  Matrix<Scalar> l = Matrix<Scalar>::Zero(2 * n, 2 * n);
  l.bottomRightCorner(n, n).diagonal().setConstant(-Scalar(p.beta));
  return l;
}

/// K + L
template <typename Scalar = double>
Matrix<Scalar> wave_operator(const WaveParams& p) {
  return hamiltonian_operator<Scalar>(p) + damping_operator<Scalar>(p);
}

/// Linear forced Hamiltonian model with structure scale 1/dx, H = H_d and
/// f_H = -beta p.
ForcedHamiltonianModel<double> assemble_wave_model(const WaveParams& p);

/// H_d(y) = dx/2 sum p_i^2 + w0^2 dx/2 sum q_i^2 + c^2/(2 dx) sum (q_i - q_{i-1})^2, q_0 = q_n.
double discrete_hamiltonian(const WaveParams& p, const Vector<double>& y);

/// grad H_d(y) = (w0^2 dx q - c^2 dx D_xx q; dx p).
Vector<double> discrete_hamiltonian_gradient(const WaveParams& p, const Vector<double>& y);

/// Cubic spline h(s): 1 - 3/2 s^2 + 3/4 s^3 on [0, 1], (2 - s)^3 / 4 on (1, 2], 0 beyond.
double spline_profile(double s);

/// q_i = h(10 |x_i - 1/2|), p = 0.
Vector<double> initial_condition(const WaveParams& p);

/// q_i = cos(2 pi m x_i / l), p = 0.
Vector<double> single_mode_condition(const WaveParams& p, Index m);

/// beta_i = -(2 / dx^2)(1 - cos(2 pi i / n)), i = 1..n.
std::vector<double> dxx_eigenvalues(const WaveParams& p);

/// Roots of lambda^2 + beta lambda + w0^2 - c^2 beta_i = 0, two per eigenvalue beta_i of D_xx.
template <typename Scalar>
std::vector<std::complex<Scalar>> modal_roots(const WaveParams& p) {
  p.validate();
  using C = std::complex<Scalar>;
  const Scalar dx = Scalar(p.l) / Scalar(p.n);
  const Scalar beta = Scalar(p.beta), c = Scalar(p.c), w0 = Scalar(p.omega0);
  const Scalar pi = std::numbers::pi_v<Scalar>;
  std::vector<C> roots;
  roots.reserve(2 * p.n);
  for (Index i = 1; i <= p.n; ++i) {
    const Scalar bi = -(Scalar(2) / (dx * dx)) * (Scalar(1) - std::cos(2 * pi * Scalar(i) / Scalar(p.n)));
    const Scalar kappa = w0 * w0 - c * c * bi;
    const Scalar disc = beta * beta - 4 * kappa;
    if (disc >= 0) {
      const Scalar r = std::sqrt(disc);
      // avoid cancellation in the small root
      const Scalar big = -(beta + r) / 2;
      const Scalar small = big != Scalar(0) ? kappa / big : Scalar(0);
      roots.emplace_back(small, Scalar(0));
      roots.emplace_back(big, Scalar(0));
    } else {
      const Scalar im = std::sqrt(-disc) / 2;
      roots.emplace_back(-beta / 2, im);
      roots.emplace_back(-beta / 2, -im);
    }
  }
  return roots;
}

inline std::vector<std::complex<double>> full_model_eigenvalues(const WaveParams& p) {
  return modal_roots<double>(p);
}

/// Largest distance between each eigenvalue of the dense K + L (computed in
/// Scalar) and its nearest unused modal root.
template <typename Scalar>
struct SpectrumCrossCheck {
  Scalar max_error = 0;
  Scalar max_real_part = 0;
};

template <typename Scalar>
SpectrumCrossCheck<Scalar> spectrum_cross_check(const WaveParams& p) {
  Eigen::EigenSolver<Matrix<Scalar>> es(wave_operator<Scalar>(p), false);
  if (es.info() != Eigen::Success) throw ConvergenceError("spectrum_cross_check: eigensolver failed", 0);
  const auto dense = es.eigenvalues();
  auto roots = modal_roots<Scalar>(p);
  std::vector<bool> used(roots.size(), false);
  SpectrumCrossCheck<Scalar> out;
  out.max_real_part = -std::numeric_limits<Scalar>::infinity();
  for (Index i = 0; i < dense.size(); ++i) {
    std::size_t best = roots.size();
    Scalar best_d = std::numeric_limits<Scalar>::infinity();
    for (std::size_t j = 0; j < roots.size(); ++j) {
      if (used[j]) continue;
      const Scalar d = std::abs(dense(i) - roots[j]);
      if (d < best_d) best_d = d, best = j;
    }
    used[best] = true;
    out.max_error = std::max(out.max_error, best_d);
    out.max_real_part = std::max(out.max_real_part, dense(i).real());
  }
  return out;
}

/// Exact solution of the semi-discrete system y' = (K + L) y by expansion in
/// the real orthonormal Fourier eigenbasis of D_xx. Each mode evolves as the
/// 2x2 system (a, b)' = [[0, 1], [-kappa, -beta]] (a, b).
class ModalReference {
 public:
  ModalReference(const WaveParams& p, const Vector<double>& y0);

  /// y(t)
  Vector<double> operator()(double t) const;
  /// Columns y(t_j).
  Matrix<double> evaluate(const std::vector<double>& times) const;

  /// Orthonormal modes as columns (n x n).
  const Matrix<double>& modes() const { return modes_; }
  /// kappa_m = w0^2 - c^2 beta_m per column of modes().
  const Vector<double>& stiffness() const { return kappa_; }

 private:
  /// exp(t B) applied to (a0, b0) for one mode.
  void propagate(double t, Index m, double& a, double& b) const;

  WaveParams params_;
  Matrix<double> modes_;
  Vector<double> kappa_;
  Vector<double> a0_;
  Vector<double> b0_;
};

/// Reference from the standard initial condition.
Vector<double> reference_solution(const WaveParams& p, double t);

/// Parameters of the coarse model with state dimension k (k / 2 grid points).
WaveParams coarse_params(const WaveParams& p, Index k);

/// Wave model on k / 2 grid points, same physical parameters.
ForcedHamiltonianModel<double> coarse_model(const WaveParams& p, Index k);

/// Subsamples a full-model trajectory every snapshot_interval and attaches
/// force columns -beta p.
SnapshotEnsemble<double> snapshots_from_trajectory(const WaveParams& p,
                                                   const Trajectory<double>& traj);

/// Integrates the full model with the midpoint rule and samples it.
SnapshotEnsemble<double> generate_snapshots(const WaveParams& p);

/// Continuum energy 1/2 int (p^2 + w0^2 q^2 + c^2 q_x^2) dx of the spline
/// initial condition; compare with discrete_hamiltonian(initial_condition).
double spline_continuum_energy(const WaveParams& p);

/// Continuum energy of q = cos(2 pi m x / l), p = 0.
double single_mode_continuum_energy(const WaveParams& p, Index m);

}  // namespace psd::wave
