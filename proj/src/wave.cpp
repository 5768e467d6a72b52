#include "psd/wave.hpp"

#include <array>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace psd::wave {

namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw std::invalid_argument("WaveParams: " + what);
}

constexpr double kPi = std::numbers::pi;

}  // namespace

void WaveParams::validate() const {
  require(std::isfinite(l) && l > 0, "l must be positive");
  require(n >= 3, "n must be >= 3 for the periodic stencil");
  require(std::isfinite(dt) && dt > 0, "dt must be positive");
  require(std::isfinite(T) && T >= 0, "T must be nonnegative");
  require(std::isfinite(beta) && beta >= 0, "beta must be nonnegative");
  require(std::isfinite(omega0) && omega0 >= 0, "omega0 must be nonnegative");
  require(std::isfinite(c) && c > 0, "c must be positive");
  require(std::isfinite(snapshot_interval) && snapshot_interval > 0,
          "snapshot_interval must be positive");
}

ForcedHamiltonianModel<double> assemble_wave_model(const WaveParams& p) {
  p.validate();
  const Index n = p.n;
  const double dx = p.dx();

  LinearForm<double> form;
  form.K = hamiltonian_operator<double>(p);
  form.L = damping_operator<double>(p);
  form.energy_hessian = Matrix<double>::Zero(2 * n, 2 * n);
  form.energy_hessian.topLeftCorner(n, n) = -p.c * p.c * dx * dxx_matrix<double>(p);
  form.energy_hessian.topLeftCorner(n, n).diagonal().array() += p.omega0 * p.omega0 * dx;
  form.energy_hessian.bottomRightCorner(n, n).diagonal().setConstant(dx);

  const double beta = p.beta;
  return ForcedHamiltonianModel<double>(
      n, [p](const Vector<double>& y) { return discrete_hamiltonian(p, y); },
      [p](const Vector<double>& y) { return discrete_hamiltonian_gradient(p, y); },
      [beta, n](const Vector<double>& y) -> Vector<double> { return -beta * y.tail(n); },
      1.0 / dx, std::move(form));
}

double discrete_hamiltonian(const WaveParams& p, const Vector<double>& y) {
  const Index n = p.n;
  if (y.size() != 2 * n) throw DimensionError("discrete_hamiltonian: state must have length 2n");
  const double dx = p.dx();
  const auto q = y.head(n);
  const auto v = y.tail(n);
  double diff = 0;
  for (Index i = 0; i < n; ++i) {
    const double d = q(i) - q((i + n - 1) % n);
    diff += d * d;
  }
  return 0.5 * dx * v.squaredNorm() + 0.5 * p.omega0 * p.omega0 * dx * q.squaredNorm() +
         p.c * p.c / (2 * dx) * diff;
}

Vector<double> discrete_hamiltonian_gradient(const WaveParams& p, const Vector<double>& y) {
  const Index n = p.n;
  if (y.size() != 2 * n) throw DimensionError("discrete_hamiltonian_gradient: state must have length 2n");
  const double dx = p.dx();
  const double w2 = p.omega0 * p.omega0 * dx;
  const double s = p.c * p.c / dx;
  Vector<double> g(2 * n);
  for (Index i = 0; i < n; ++i) {
    const double lap = y((i + n - 1) % n) - 2 * y(i) + y((i + 1) % n);
    g(i) = w2 * y(i) - s * lap;
  }
  g.tail(n) = dx * y.tail(n);
  return g;
}

double spline_profile(double s) {
  s = std::abs(s);
  if (s <= 1) return 1 - 1.5 * s * s + 0.75 * s * s * s;
  if (s <= 2) {
    const double r = 2 - s;
    return 0.25 * r * r * r;
  }
  return 0;
}

Vector<double> initial_condition(const WaveParams& p) {
  p.validate();
  const Index n = p.n;
  const double dx = p.dx();
  Vector<double> y = Vector<double>::Zero(2 * n);
  for (Index i = 0; i < n; ++i) {
    const double x = static_cast<double>(i + 1) * dx;
    y(i) = spline_profile(10 * std::abs(x - 0.5));
  }
  return y;
}

Vector<double> single_mode_condition(const WaveParams& p, Index m) {
  p.validate();
  const Index n = p.n;
  const double dx = p.dx();
  Vector<double> y = Vector<double>::Zero(2 * n);
  for (Index i = 0; i < n; ++i) {
    const double x = static_cast<double>(i + 1) * dx;
    y(i) = std::cos(2 * kPi * static_cast<double>(m) * x / p.l);
  }
  return y;
}

std::vector<double> dxx_eigenvalues(const WaveParams& p) {
  p.validate();
  const double dx = p.dx();
  std::vector<double> out(p.n);
  for (Index i = 1; i <= p.n; ++i)
    out[i - 1] = -(2 / (dx * dx)) * (1 - std::cos(2 * kPi * static_cast<double>(i) / static_cast<double>(p.n)));
  return out;
}

ModalReference::ModalReference(const WaveParams& p, const Vector<double>& y0) : params_(p) {
  p.validate();
  const Index n = p.n;
  if (y0.size() != 2 * n) throw DimensionError("ModalReference: y0 must have length 2n");
  const double dx = p.dx();
  const double nn = static_cast<double>(n);

  modes_.resize(n, n);
  kappa_.resize(n);
  auto stiffness = [&](Index m) {
    const double bm = -(2 / (dx * dx)) * (1 - std::cos(2 * kPi * static_cast<double>(m) / nn));
    return p.omega0 * p.omega0 - p.c * p.c * bm;
  };
  Index col = 0;
  modes_.col(col).setConstant(1 / std::sqrt(nn));
  kappa_(col++) = stiffness(0);
  const double norm = std::sqrt(2 / nn);
  for (Index m = 1; 2 * m < n; ++m) {
    for (Index i = 0; i < n; ++i) {
      const double theta = 2 * kPi * static_cast<double>(m) * static_cast<double>(i + 1) / nn;
      modes_(i, col) = norm * std::cos(theta);
      modes_(i, col + 1) = norm * std::sin(theta);
    }
    kappa_(col) = kappa_(col + 1) = stiffness(m);
    col += 2;
  }
  if (n % 2 == 0) {
    for (Index i = 0; i < n; ++i) modes_(i, col) = ((i + 1) % 2 == 0 ? 1.0 : -1.0) / std::sqrt(nn);
    kappa_(col++) = stiffness(n / 2);
  }
  a0_ = modes_.transpose() * y0.head(n);
  b0_ = modes_.transpose() * y0.tail(n);
}

void ModalReference::propagate(double t, Index m, double& a, double& b) const {
  // exp(tB) = C I + S (B + beta/2 I), with (B + beta/2 I)^2 = mu^2 I.
  const double beta = params_.beta;
  const double kappa = kappa_(m);
  const double mu2 = beta * beta / 4 - kappa;
  const double decay = std::exp(-beta * t / 2);
  double C, S;
  if (mu2 > 0) {
    const double mu = std::sqrt(mu2);
    const double lp = -beta / 2 + mu, lm = -beta / 2 - mu;
    C = 0.5 * (std::exp(lp * t) + std::exp(lm * t));
    S = -std::exp(lp * t) * std::expm1(-2 * mu * t) / (2 * mu);  // no 0 * inf for large beta t
  } else if (mu2 < 0) {
    const double nu = std::sqrt(-mu2);
    C = decay * std::cos(nu * t);
    S = decay * std::sin(nu * t) / nu;
  } else {
    C = decay;
    S = t * decay;
  }
  const double a0 = a0_(m), b0 = b0_(m);
  // B + beta/2 I = [[beta/2, 1], [-kappa, -beta/2]]
  a = C * a0 + S * (beta / 2 * a0 + b0);
  b = C * b0 + S * (-kappa * a0 - beta / 2 * b0);
}

Vector<double> ModalReference::operator()(double t) const {
  return evaluate({t}).col(0);
}

Matrix<double> ModalReference::evaluate(const std::vector<double>& times) const {
  const Index n = params_.n;
  const Index m = static_cast<Index>(times.size());
  Matrix<double> a(n, m), b(n, m);
  for (Index j = 0; j < m; ++j) {
    if (!(times[j] >= 0)) throw std::invalid_argument("ModalReference: t must be nonnegative");
    for (Index i = 0; i < n; ++i) propagate(times[j], i, a(i, j), b(i, j));
  }
  Matrix<double> y(2 * n, m);
  y.topRows(n).noalias() = modes_ * a;
  y.bottomRows(n).noalias() = modes_ * b;
  return y;
}

Vector<double> reference_solution(const WaveParams& p, double t) {
  return ModalReference(p, initial_condition(p))(t);
}

WaveParams coarse_params(const WaveParams& p, Index k) {
  if (k % 2 != 0) throw std::invalid_argument("coarse model: k must be even");
  if (k / 2 < 3) throw std::invalid_argument("coarse model: k / 2 must be >= 3");
  WaveParams c = p;
  c.n = k / 2;
  c.validate();
  return c;
}

ForcedHamiltonianModel<double> coarse_model(const WaveParams& p, Index k) {
  return assemble_wave_model(coarse_params(p, k));
}

SnapshotEnsemble<double> snapshots_from_trajectory(const WaveParams& p,
                                                   const Trajectory<double>& traj) {
  p.validate();
  if (traj.states.empty()) throw std::invalid_argument("snapshots_from_trajectory: empty trajectory");
  const double ratio = p.snapshot_interval / p.dt;
  const long stride = std::lround(ratio);
  if (stride < 1 || std::abs(ratio - static_cast<double>(stride)) > 1e-9 * ratio)
    throw std::invalid_argument("snapshot_interval must be a positive multiple of dt");
  const Index n = p.n;
  const Index count = static_cast<Index>((traj.states.size() - 1) / stride) + 1;
  Matrix<double> states(2 * n, count);
  Matrix<double> forces(n, count);
  std::vector<double> times(count);
  for (Index j = 0; j < count; ++j) {
    const auto& y = traj.states[j * stride];
    if (y.size() != 2 * n) throw DimensionError("snapshots_from_trajectory: state size mismatch");
    states.col(j) = y;
    forces.col(j) = -p.beta * y.tail(n);
    times[j] = traj.times[j * stride];
  }
  return SnapshotEnsemble<double>(std::move(states), std::move(times), std::move(forces));
}

SnapshotEnsemble<double> generate_snapshots(const WaveParams& p) {
  const auto model = assemble_wave_model(p);
  const auto run = integrate(model, initial_condition(p), p.dt, p.T, {}, "full");
  if (!run.completed()) throw std::runtime_error("generate_snapshots: " + run.message);
  return snapshots_from_trajectory(p, run.trajectory);
}

double spline_continuum_energy(const WaveParams& p) {
  p.validate();
  // 4-point Gauss-Legendre is exact for the degree-6 integrands on each piece.
  static constexpr std::array<double, 4> nodes = {-0.8611363115940526, -0.3399810435848563,
                                                  0.3399810435848563, 0.8611363115940526};
  static constexpr std::array<double, 4> weights = {0.3478548451374538, 0.6521451548625461,
                                                    0.6521451548625461, 0.3478548451374538};
  auto dh = [](double s) { return s <= 1 ? -3 * s + 2.25 * s * s : -0.75 * (2 - s) * (2 - s); };
  double hh = 0, dd = 0;
  for (double lo : {0.0, 1.0}) {
    for (std::size_t j = 0; j < nodes.size(); ++j) {
      const double s = lo + 0.5 * (nodes[j] + 1);
      hh += 0.5 * weights[j] * spline_profile(s) * spline_profile(s);
      dd += 0.5 * weights[j] * dh(s) * dh(s);
    }
  }
  // x = 1/2 +- s/10 on both sides: dx = ds/10, q_x = 10 h'(s)
  const double int_q2 = 2 * hh / 10;
  const double int_qx2 = 2 * 10 * dd;
  return 0.5 * (p.omega0 * p.omega0 * int_q2 + p.c * p.c * int_qx2);
}

double single_mode_continuum_energy(const WaveParams& p, Index m) {
  p.validate();
  if (m == 0) return 0.5 * p.omega0 * p.omega0 * p.l;
  const double kx = 2 * kPi * static_cast<double>(m) / p.l;
  return 0.5 * (p.omega0 * p.omega0 + p.c * p.c * kx * kx) * p.l / 2;
}

}  // namespace psd::wave
