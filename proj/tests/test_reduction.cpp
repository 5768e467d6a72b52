#include <doctest.h>

#include "oracles.hpp"
#include "psd/reduction.hpp"
#include "psd/wave.hpp"

using namespace psd;
using oracle::Mat;
using oracle::Vec;

namespace {

wave::WaveParams small_wave(double beta = 0.1, Index n = 12) {
  wave::WaveParams p;
  p.n = n;
  p.beta = beta;
  p.T = 1;
  return p;
}

ForcedHamiltonianModel<double> damped_oscillator(double w0, double zeta) {
  Mat s(2, 2);
  s << w0 * w0, 0, 0, 1;
  Mat f(1, 2);
  f << 0, -2 * zeta * w0;
  return ForcedHamiltonianModel<double>::linear(s, f);
}

SymplecticBasis<double> random_general(Index n, Index k, std::mt19937_64& rng) {
  const auto g = oracle::general_symplectic(n, k, rng);
  return SymplecticBasis<double>::from_blocks(g.qq, g.pq, g.pp);
}

/// H = 1/2 sum (q^2 + p^2), f = -(1 + q^2) p elementwise.
ForcedHamiltonianModel<double> rayleigh_model(Index n) {
  auto H = [](const Vec& x) { return 0.5 * x.squaredNorm(); };
  auto grad = [](const Vec& x) -> Vec { return x; };
  auto force = [n](const Vec& x) -> Vec {
    const Vec q = x.head(n), p = x.tail(n);
    return -(1.0 + q.array().square()).matrix().cwiseProduct(p);
  };
  return ForcedHamiltonianModel<double>(n, H, grad, force);
}

}  // namespace

TEST_CASE("identity basis reproduces the full model") {
  const auto model = wave::assemble_wave_model(small_wave());
  const auto id = SymplecticBasis<double>::cotangent_lift(Mat::Identity(12, 12));
  const auto red = reduce_structure_preserving(model, id);
  CHECK(red.preserves_structure());
  CHECK(red.provenance() == Provenance::structure_preserving);
  CHECK((red.operator_matrix() - model.linear_form().operator_matrix()).norm() < 1e-12);
  std::mt19937_64 rng(20);
  const Vec x = oracle::gaussian(24, rng);
  CHECK(red.energy(x) == doctest::Approx(model.hamiltonian(x)).epsilon(1e-13));
  CHECK((red.field(x) - model.vector_field(x)).norm() < 1e-10 * model.vector_field(x).norm());
}

TEST_CASE("damped oscillator") {
  const double w0 = 1.5, zeta = 0.2;
  const auto model = damped_oscillator(w0, zeta);
  Mat expected(2, 2);
  expected << 0, 1, -w0 * w0, -2 * zeta * w0;
  CHECK((model.linear_form().operator_matrix() - expected).norm() == 0);
  const auto red = reduce_structure_preserving(model, SymplecticBasis<double>::cotangent_lift(Mat::Identity(1, 1)));
  CHECK((red.operator_matrix() - expected).norm() == 0);
  for (double p : {-2.0, 0.0, 0.7}) {
    Vec x(2);
    x << 0.3, p;
    CHECK(energy_rate(model, x) == doctest::Approx(-2 * zeta * w0 * p * p));
    CHECK(energy_rate_symplectic(model, x) == doctest::Approx(-2 * zeta * w0 * p * p));
  }
}

TEST_CASE("structure-preserving reduction of the wave model") {
  const auto p = small_wave(0.3);
  const auto model = wave::assemble_wave_model(p);
  const Mat op = wave::wave_operator(p);
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 10; ++trial) {
    const auto basis = trial % 2 == 0
                           ? SymplecticBasis<double>::cotangent_lift(oracle::orthonormal(12, 4, rng))
                           : random_general(12, 4, rng);
    const Mat a = basis.matrix();
    const Mat inv = oracle::poisson(4).transpose() * a.transpose() * oracle::poisson(12);
    const auto red = reduce_structure_preserving(model, basis);
    CHECK(red.dim() == 8);
    CHECK(red.full_dim() == 24);
    CHECK((red.operator_matrix() - inv * op * a).norm() < 1e-10 * op.norm());
    const auto& form = red.dynamics().linear_form();
    CHECK((form.K + form.L - inv * op * a).norm() < 1e-10 * op.norm());
    CHECK((form.energy_hessian - a.transpose() * model.linear_form().energy_hessian * a).norm() < 1e-12);
    // damping never enters the reduced q equation
    CHECK(form.L.topRows(4).norm() < 1e-14);
    const Vec z = oracle::gaussian(8, rng);
    const Vec generic = red.dynamics().vector_field(z);
    CHECK((generic - red.operator_matrix() * z).norm() < 1e-9 * (1 + generic.norm()));
    CHECK(red.dynamics().force_field(z).head(4).norm() == 0);
    CHECK(red.energy(z) == doctest::Approx(model.hamiltonian(a * z)).epsilon(1e-11));
    CHECK((red.reduce_state(a * z) - z).norm() < 1e-10 * (1 + z.norm()));
  }
}

TEST_CASE("reduction rejects mismatched dimensions") {
  const auto model = wave::assemble_wave_model(small_wave());
  std::mt19937_64 rng(22);
  const auto basis = SymplecticBasis<double>::cotangent_lift(oracle::orthonormal(10, 2, rng));
  CHECK_THROWS_AS(reduce_structure_preserving(model, basis), DimensionError);
  CHECK_THROWS_AS(reduce_variational(model, Mat(Mat::Identity(20, 4))), DimensionError);
  CHECK_THROWS_AS(reduce_pod_galerkin(model, Mat(Mat::Identity(20, 4))), DimensionError);
}

TEST_CASE("variational matrix") {
  std::mt19937_64 rng(23);
  SUBCASE("identity gives -J") {
    CHECK((variational_matrix(Mat(Mat::Identity(6, 6))) + oracle::poisson(3)).norm() == 0);
  }
  SUBCASE("symplectic bases give J^T with inverse J") {
    for (int trial = 0; trial < 20; ++trial) {
      const Mat a = random_general(9, 3, rng).matrix();
      const Mat m = variational_matrix(a);
      CHECK((m - oracle::poisson(3).transpose()).norm() < 1e-10);
      CHECK((m.inverse() - oracle::poisson(3)).norm() < 1e-10);
    }
  }
  SUBCASE("shape checks") {
    CHECK_THROWS_AS(variational_matrix(Mat(Mat::Zero(5, 2))), DimensionError);
    CHECK_THROWS_AS(variational_matrix(Mat(Mat::Zero(4, 6))), DimensionError);
  }
}

TEST_CASE("variational reduction") {
  const auto p = small_wave(0.2, 10);
  const auto model = wave::assemble_wave_model(p);
  std::mt19937_64 rng(24);
  SUBCASE("agrees with the structure-preserving reduction on symplectic bases") {
    for (int trial = 0; trial < 10; ++trial) {
      const auto basis = random_general(10, 3, rng);
      const auto sp = reduce_structure_preserving(model, basis);
      const auto var = reduce_variational(model, basis.matrix());
      CHECK(var.preserves_structure());
      CHECK(var.provenance() == Provenance::variational);
      CHECK((var.operator_matrix() - sp.operator_matrix()).norm() < 1e-9 * sp.operator_matrix().norm());
      const Vec z = oracle::gaussian(6, rng);
      CHECK((var.field(z) - sp.field(z)).norm() < 1e-9 * (1 + sp.field(z).norm()));
    }
  }
  SUBCASE("general matrix satisfies M z' = s A^T grad H - [A_qq^T f; A_qp^T f]") {
    for (int trial = 0; trial < 20; ++trial) {
      const Mat a = oracle::gaussian(20, 6, rng);
      const auto var = reduce_variational(model, a);
      CHECK_FALSE(var.preserves_structure());
      const Vec z = oracle::gaussian(6, rng);
      const Vec x = a * z;
      const Vec f = model.force(x);
      Vec rhs = model.structure_scale() * a.transpose() * model.gradient(x);
      rhs.head(3) -= a.topLeftCorner(10, 3).transpose() * f;
      rhs.tail(3) -= a.topRightCorner(10, 3).transpose() * f;
      const Vec lhs = variational_matrix(a) * var.field(z);
      CHECK((lhs - rhs).norm() < 1e-9 * (1 + rhs.norm()));
      CHECK((var.field(z) - var.operator_matrix() * z).norm() < 1e-9 * (1 + var.field(z).norm()));
    }
  }
  SUBCASE("singular M") {
    Mat a = Mat::Zero(20, 4);
    a.topLeftCorner(10, 2) = oracle::orthonormal(10, 2, rng);
    CHECK_THROWS_AS(reduce_variational(model, a), SingularSystemError);
  }
}

TEST_CASE("POD-Galerkin reduction") {
  const auto p = small_wave(0.1, 8);
  const auto model = wave::assemble_wave_model(p);
  const Mat op = wave::wave_operator(p);
  SUBCASE("coordinate columns select a principal submatrix") {
    Mat phi = Mat::Zero(16, 3);
    phi(0, 0) = phi(5, 1) = phi(9, 2) = 1;
    const auto red = reduce_pod_galerkin(model, phi);
    CHECK_FALSE(red.preserves_structure());
    const Index idx[3] = {0, 5, 9};
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) CHECK(red.operator_matrix()(i, j) == doctest::Approx(op(idx[i], idx[j])));
  }
  SUBCASE("square orthogonal basis is a similarity transform") {
    std::mt19937_64 rng(25);
    const Mat phi = oracle::orthonormal(16, 16, rng);
    const auto red = reduce_pod_galerkin(model, phi);
    CHECK((phi * red.operator_matrix() * phi.transpose() - op).norm() < 1e-10 * op.norm());
  }
  SUBCASE("non-orthonormal basis rejected") {
    CHECK_THROWS_AS(reduce_pod_galerkin(model, Mat(2 * Mat::Identity(16, 2))), std::invalid_argument);
  }
}

TEST_CASE("energy rate of the wave model") {
  const auto p = small_wave(0.4, 10);
  const auto model = wave::assemble_wave_model(p);
  std::mt19937_64 rng(26);
  for (int trial = 0; trial < 100; ++trial) {
    const Vec x = oracle::gaussian(20, rng);
    const double expected = -p.beta * p.dx() * x.tail(10).squaredNorm();
    CHECK(energy_rate(model, x) == doctest::Approx(expected).epsilon(1e-12));
    CHECK(energy_rate_symplectic(model, x) == doctest::Approx(expected).epsilon(1e-10));
    CHECK(energy_rate(model, x) <= 0);
  }
}

TEST_CASE("energy rate preservation report") {
  const auto p = small_wave(0.3, 10);
  const auto model = wave::assemble_wave_model(p);
  std::mt19937_64 rng(27);
  SUBCASE("force in the span of A_pp") {
    for (int trial = 0; trial < 100; ++trial) {
      const auto basis = SymplecticBasis<double>::cotangent_lift(oracle::orthonormal(10, 3, rng));
      const auto r = energy_rate_preservation_report(model, basis, Vec(oracle::gaussian(6, rng)));
      CHECK(r.bound < 1e-12);
      CHECK(r.discrepancy < 1e-12);
      CHECK(r.within_bound);
    }
  }
  SUBCASE("general bases respect the bound") {
    int nontrivial = 0;
    for (int trial = 0; trial < 100; ++trial) {
      const auto basis = random_general(10, 3, rng);
      const auto r = energy_rate_preservation_report(model, basis, Vec(oracle::gaussian(6, rng)));
      CHECK(r.within_bound);
      CHECK(r.discrepancy <= r.bound * (1 + 1e-12) + 1e-14);
      nontrivial += r.discrepancy > 1e-8;
    }
    CHECK(nontrivial > 50);
  }
  SUBCASE("length check") {
    const auto basis = SymplecticBasis<double>::cotangent_lift(oracle::orthonormal(10, 3, rng));
    CHECK_THROWS_AS(energy_rate_preservation_report(model, basis, Vec(Vec::Zero(5))), DimensionError);
  }
}

TEST_CASE("Rayleigh damping stays dissipative after reduction") {
  const Index n = 8;
  const auto model = rayleigh_model(n);
  std::mt19937_64 rng(28);
  for (int trial = 0; trial < 100; ++trial) {
    const auto basis = SymplecticBasis<double>::cotangent_lift(oracle::orthonormal(n, 3, rng));
    const auto red = reduce_structure_preserving(model, basis);
    CHECK_FALSE(red.is_linear());
    const Vec z = oracle::gaussian(6, rng);
    const double full = energy_rate(model, Vec(basis.lift(z)));
    const double reduced = energy_rate(red.dynamics(), z);
    CHECK(reduced <= 1e-14);
    CHECK(reduced == doctest::Approx(full).epsilon(1e-10));
    const Vec x = basis.lift(z);
    const Vec zq_rate = red.field(z).head(3);
    CHECK(zq_rate.isApprox(Vec(basis.pp().transpose() * x.tail(n))));
  }
}
