#include "psd/stability.hpp"

#include <cmath>

namespace psd {

ComplexVector<double> normalize_eigenvector(const ComplexVector<double>& v) {
  const double norm = v.norm();
  if (!(norm > 0)) throw std::invalid_argument("normalize_eigenvector: zero vector");
  ComplexVector<double> u = v / norm;
  const double cutoff = 1e-12 * u.cwiseAbs().maxCoeff();
  for (Index i = 0; i < u.size(); ++i) {
    if (std::abs(u(i)) > cutoff) {
      u *= std::abs(u(i)) / u(i);
      u(i) = std::abs(u(i));
      break;
    }
  }
  return u;
}

StabilityReport analyze_operator(const Matrix<double>& op, const Vector<double>& z0, double beta,
                                 Index basis_dim) {
  if (op.rows() != op.cols() || op.cols() != z0.size())
    throw DimensionError("analyze_operator: operator and z0 sizes disagree");
  if (!op.allFinite()) throw std::invalid_argument("analyze_operator: operator has non-finite entries");
  Eigen::EigenSolver<Matrix<double>> es(op, true);
  if (es.info() != Eigen::Success) throw ConvergenceError("analyze_operator: eigensolver failed", 0);
  const auto& values = es.eigenvalues();
  Index best = 0;
  for (Index i = 1; i < values.size(); ++i) {
    const auto a = values(i), b = values(best);
    if (a.real() > b.real() || (a.real() == b.real() && a.imag() > b.imag())) best = i;
  }
  StabilityReport r;
  r.basis_dim = basis_dim;
  r.beta = beta;
  r.lambda_star = values(best);
  r.xi_star = normalize_eigenvector(es.eigenvectors().col(best));
  r.a_star = std::abs((r.xi_star.array() * z0.cast<std::complex<double>>().array()).sum());
  r.stable = r.lambda_star.real() < 0;
  r.a_star_nonzero = r.a_star > 1e-12 * std::max(1.0, z0.norm());
  return r;
}

namespace {

wave::WaveParams with_beta(wave::WaveParams p, double beta, const SnapshotEnsemble<double>& ens) {
  p.beta = beta;
  p.validate();
  if (ens.half_dim() != p.n) throw DimensionError("stability: snapshot dimension differs from 2n");
  return p;
}

}  // namespace

StabilityReport table2_cell(const wave::WaveParams& params, double beta, Index k,
                            const SnapshotEnsemble<double>& snapshots) {
  const auto p = with_beta(params, beta, snapshots);
  const Matrix<double> mx = build_state_matrix(snapshots);
  if (mx.cwiseAbs().maxCoeff() == 0) throw DegenerateDataError("table2_cell: snapshot matrix is zero");
  const auto pod = pod_basis(mx, k);
  const Matrix<double> op = pod.basis.transpose() * wave::wave_operator<double>(p) * pod.basis;
  const Vector<double> z0 = pod.basis.transpose() * wave::initial_condition(p);
  return analyze_operator(op, z0, beta, k);
}

StabilityReport psd_stability(const wave::WaveParams& params, Index k,
                              const SnapshotEnsemble<double>& snapshots) {
  const auto p = with_beta(params, params.beta, snapshots);
  const auto lift = cotangent_lift(snapshots, k);
  const Matrix<double> op = lift.basis.project(wave::wave_operator<double>(p) * lift.basis.matrix());
  const Vector<double> z0 = lift.basis.project(wave::initial_condition(p));
  return analyze_operator(op, z0, p.beta, k);
}

}  // namespace psd
