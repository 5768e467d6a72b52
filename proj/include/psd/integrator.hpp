#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/LU>

#include "psd/model.hpp"
#include "psd/reduction.hpp"
#include "psd/types.hpp"

namespace psd {

/// One implicit-midpoint step for y' = A y, i.e. the solution of
///   (I - dt/2 A) y+ = (I + dt/2 A) y.
/// (I - dt/2 A) is factored once; the one-step propagator is formed from that
/// factorization so each step costs a single matrix-vector product.
template <typename Scalar>
class MidpointStepper {
 public:
  using MatrixType = Matrix<Scalar>;
  using VectorType = Vector<Scalar>;

  MidpointStepper(MatrixType op, Scalar dt) : op_(std::move(op)), dt_(dt) {
    if (op_.rows() != op_.cols()) throw DimensionError("MidpointStepper: operator must be square");
    if (!(dt_ != Scalar(0)) || !std::isfinite(static_cast<double>(dt_)))
      throw std::invalid_argument("MidpointStepper: dt must be finite and nonzero");
    const Index d = op_.rows();
    const MatrixType half = (dt_ / 2) * op_;
    Eigen::PartialPivLU<MatrixType> lu(MatrixType::Identity(d, d) - half);
    const Scalar rcond = lu.rcond();
    if (!(rcond > Scalar(100) * std::numeric_limits<Scalar>::epsilon()))
      throw SingularSystemError("MidpointStepper: I - dt/2 A is singular",
                                static_cast<double>(rcond));
    propagator_ = lu.solve(MatrixType::Identity(d, d) + half);
  }

  VectorType step(const VectorType& y) const { return propagator_ * y; }

  /// S = (I - dt/2 A)^{-1} (I + dt/2 A)
  const MatrixType& step_matrix() const { return propagator_; }

  const MatrixType& operator_matrix() const { return op_; }
  Scalar dt() const { return dt_; }
  Index dim() const { return op_.rows(); }

 private:
  MatrixType op_;
  Scalar dt_;
  MatrixType propagator_;
};

/// Midpoint step with a per-thread cache keyed on (operator, dt).
template <typename Scalar>
Vector<Scalar> midpoint_step_linear(const Matrix<Scalar>& op, const Vector<Scalar>& y, Scalar dt) {
  if (op.cols() != y.size()) throw DimensionError("midpoint_step_linear: size mismatch");
  thread_local std::optional<MidpointStepper<Scalar>> cache;
  if (!cache || cache->dt() != dt || cache->dim() != op.rows() || cache->operator_matrix() != op)
    cache.emplace(op, dt);
  return cache->step(y);
}

struct NewtonOptions {
  double tol = 1e-12;          // on ||G||_inf / (1 + ||y||_inf)
  int max_iter = 50;
  double fd_step = 1e-7;       // relative finite-difference step
};

template <typename Scalar>
using VectorField = std::function<Vector<Scalar>(const Vector<Scalar>&)>;

template <typename Scalar>
using JacobianFn = std::function<Matrix<Scalar>(const Vector<Scalar>&)>;

namespace detail {

template <typename Scalar>
Matrix<Scalar> fd_jacobian(const VectorField<Scalar>& field, const Vector<Scalar>& x,
                           const Vector<Scalar>& fx, Scalar rel_step) {
  const Index d = x.size();
  Matrix<Scalar> jac(d, d);
  Vector<Scalar> xp = x;
  for (Index j = 0; j < d; ++j) {
    const Scalar h = rel_step * std::max(Scalar(1), std::abs(x(j)));
    xp(j) = x(j) + h;
    jac.col(j) = (field(xp) - fx) / h;
    xp(j) = x(j);
  }
  return jac;
}

}  // namespace detail

/// Solves y+ = y + dt F((y + y+)/2) by Newton's method. Uses the analytic
/// Jacobian when given, finite differences otherwise.
template <typename Scalar>
Vector<Scalar> midpoint_step_nonlinear(const VectorField<Scalar>& field, const Vector<Scalar>& y,
                                       Scalar dt, const NewtonOptions& opts = {},
                                       const JacobianFn<Scalar>& jacobian = nullptr) {
  const Index d = y.size();
  const Scalar scale = Scalar(1) + y.cwiseAbs().maxCoeff();
  const Scalar tol = Scalar(opts.tol) * scale;

  Vector<Scalar> next = y + dt * field(y);  // explicit Euler predictor
  Scalar residual = std::numeric_limits<Scalar>::infinity();
  for (int it = 0; it <= opts.max_iter; ++it) {
    const Vector<Scalar> mid = (y + next) / 2;
    const Vector<Scalar> f_mid = field(mid);
    const Vector<Scalar> g = next - y - dt * f_mid;
    residual = g.cwiseAbs().maxCoeff();
    if (!std::isfinite(static_cast<double>(residual))) break;
    if (residual <= tol) return next;
    if (it == opts.max_iter) break;
    const Matrix<Scalar> jf =
        jacobian ? jacobian(mid) : detail::fd_jacobian(field, mid, f_mid, Scalar(opts.fd_step));
    const Matrix<Scalar> jg = Matrix<Scalar>::Identity(d, d) - (dt / 2) * jf;
    next -= jg.partialPivLu().solve(g);
  }
  throw ConvergenceError("midpoint_step_nonlinear: Newton iteration did not converge",
                         static_cast<double>(residual));
}

template <typename Scalar>
struct Trajectory {
  std::vector<Scalar> times;
  std::vector<Vector<Scalar>> states;
  Scalar step = 0;
  std::string model_tag;

  std::size_t size() const { return states.size(); }
};

template <typename Scalar>
struct EnergySeries {
  std::vector<Scalar> times;
  std::vector<Scalar> values;

  /// Largest E(t_{i+1}) - E(t_i); <= 0 for a dissipative run.
  Scalar max_increase() const {
    Scalar worst = -std::numeric_limits<Scalar>::infinity();
    for (std::size_t i = 1; i < values.size(); ++i) worst = std::max(worst, values[i] - values[i - 1]);
    return worst;
  }
};

enum class IntegrationStatus { completed, blowup, step_failure };

template <typename Scalar>
struct IntegrationResult {
  Trajectory<Scalar> trajectory;
  EnergySeries<Scalar> energy;
  IntegrationStatus status = IntegrationStatus::completed;
  std::string message;

  bool completed() const { return status == IntegrationStatus::completed; }
  /// Time of the last recorded state.
  Scalar final_time() const { return trajectory.times.empty() ? Scalar(0) : trajectory.times.back(); }
};

struct IntegrateOptions {
  /// Stop with status `blowup` once ||y|| exceeds this or turns non-finite.
  double blowup_threshold = std::numeric_limits<double>::infinity();
  NewtonOptions newton{};
};

/// Number of steps T / dt; rejects T that is not an integer multiple of dt.
inline long step_count(double dt, double final_time) {
  if (!(dt > 0)) throw std::invalid_argument("integrate: dt must be positive");
  if (!(final_time >= 0)) throw std::invalid_argument("integrate: T must be nonnegative");
  const double ratio = final_time / dt;
  const long steps = std::lround(ratio);
  if (std::abs(ratio - static_cast<double>(steps)) > 1e-9 * std::max(1.0, ratio))
    throw std::invalid_argument("integrate: T / dt is not an integer");
  return steps;
}

/// Fixed-step time loop around a one-step map. Energy is recorded at every step.
template <typename Scalar, typename StepFn>
IntegrationResult<Scalar> integrate_with(StepFn&& step,
                                         const std::function<Scalar(const Vector<Scalar>&)>& energy,
                                         const Vector<Scalar>& y0, Scalar dt, Scalar final_time,
                                         const IntegrateOptions& opts, std::string tag) {
  const long steps = step_count(static_cast<double>(dt), static_cast<double>(final_time));
  IntegrationResult<Scalar> out;
  auto& traj = out.trajectory;
  traj.step = dt;
  traj.model_tag = std::move(tag);
  traj.times.reserve(steps + 1);
  traj.states.reserve(steps + 1);
  out.energy.times.reserve(steps + 1);
  out.energy.values.reserve(steps + 1);

  auto record = [&](long i, const Vector<Scalar>& y) {
    const Scalar t = dt * Scalar(i);
    traj.times.push_back(t);
    traj.states.push_back(y);
    out.energy.times.push_back(t);
    out.energy.values.push_back(energy(y));
  };

  Vector<Scalar> y = y0;
  record(0, y);
  const Scalar threshold = Scalar(opts.blowup_threshold);
  for (long i = 1; i <= steps; ++i) {
    try {
      y = step(y);
    } catch (const std::exception& e) {
      out.status = IntegrationStatus::step_failure;
      out.message = "step " + std::to_string(i) + ": " + e.what();
      return out;
    }
    const Scalar norm = y.norm();
    const bool finite = std::isfinite(static_cast<double>(norm));
    if (finite) record(i, y);
    if (!finite || norm > threshold) {
      out.status = IntegrationStatus::blowup;
      out.message = "state norm exceeded threshold at t = " + std::to_string(static_cast<double>(dt * Scalar(i)));
      return out;
    }
  }
  return out;
}

/// Linear system y' = A y.
template <typename Scalar>
IntegrationResult<Scalar> integrate(const Matrix<Scalar>& op,
                                    const std::function<Scalar(const Vector<Scalar>&)>& energy,
                                    const Vector<Scalar>& y0, Scalar dt, Scalar final_time,
                                    const IntegrateOptions& opts = {}, std::string tag = "linear") {
  if (op.cols() != y0.size()) throw DimensionError("integrate: operator/state size mismatch");
  const MidpointStepper<Scalar> stepper(op, dt);
  return integrate_with<Scalar>([&](const Vector<Scalar>& y) { return stepper.step(y); }, energy,
                                y0, dt, final_time, opts, std::move(tag));
}

/// General vector field, solved by Newton at each step.
template <typename Scalar>
IntegrationResult<Scalar> integrate(const VectorField<Scalar>& field,
                                    const std::function<Scalar(const Vector<Scalar>&)>& energy,
                                    const Vector<Scalar>& y0, Scalar dt, Scalar final_time,
                                    const IntegrateOptions& opts = {},
                                    std::string tag = "nonlinear") {
  return integrate_with<Scalar>(
      [&](const Vector<Scalar>& y) { return midpoint_step_nonlinear(field, y, dt, opts.newton); },
      energy, y0, dt, final_time, opts, std::move(tag));
}

template <typename Scalar>
IntegrationResult<Scalar> integrate(const ForcedHamiltonianModel<Scalar>& model,
                                    const Vector<Scalar>& y0, Scalar dt, Scalar final_time,
                                    const IntegrateOptions& opts = {}, std::string tag = "full") {
  const std::function<Scalar(const Vector<Scalar>&)> energy = model.hamiltonian_fn();
  if (model.is_linear())
    return integrate(model.linear_form().operator_matrix(), energy, y0, dt, final_time, opts,
                     std::move(tag));
  const VectorField<Scalar> field = [&model](const Vector<Scalar>& x) {
    return model.vector_field(x);
  };
  return integrate(field, energy, y0, dt, final_time, opts, std::move(tag));
}

/// Integrates a reduced model from reduced initial state z0.
template <typename Scalar>
IntegrationResult<Scalar> integrate(const ReducedModel<Scalar>& model, const Vector<Scalar>& z0,
                                    Scalar dt, Scalar final_time, const IntegrateOptions& opts = {},
                                    std::string tag = "reduced") {
  const std::function<Scalar(const Vector<Scalar>&)> energy = [&model](const Vector<Scalar>& z) {
    return model.energy(z);
  };
  if (model.is_linear())
    return integrate(model.operator_matrix(), energy, z0, dt, final_time, opts, std::move(tag));
  const VectorField<Scalar> field = [&model](const Vector<Scalar>& z) { return model.field(z); };
  return integrate(field, energy, z0, dt, final_time, opts, std::move(tag));
}

}  // namespace psd
