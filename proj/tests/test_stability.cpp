#include <doctest.h>

#include "oracles.hpp"
#include "psd/stability.hpp"

using namespace psd;
using oracle::Mat;
using oracle::Vec;

namespace {

wave::WaveParams small_params(double beta) {
  wave::WaveParams p;
  p.n = 40;
  p.beta = beta;
  p.T = 10;
  return p;
}

}  // namespace

TEST_CASE("reduced spectrum") {
  Mat a(2, 2);
  a << 0, 1, -4, 0;
  const auto ev = reduced_spectrum(a);
  CHECK(std::abs(ev(0).real()) < 1e-15);
  CHECK(std::abs(std::abs(ev(0).imag()) - 2) < 1e-14);
  Mat d = Mat::Zero(3, 3);
  d.diagonal() << -1, 2, 0.5;
  auto values = reduced_spectrum(d);
  std::vector<double> re;
  for (Index i = 0; i < 3; ++i) re.push_back(values(i).real());
  std::sort(re.begin(), re.end());
  CHECK(re == std::vector<double>{-1, 0.5, 2});
  CHECK_THROWS_AS(reduced_spectrum(Mat(Mat::Zero(2, 3))), DimensionError);
  Mat bad = Mat::Identity(2, 2);
  bad(0, 1) = std::nan("");
  CHECK_THROWS_AS(reduced_spectrum(bad), std::invalid_argument);
}

TEST_CASE("eigenvector normalization") {
  ComplexVector<double> v(3);
  v << std::complex<double>(0, 0), std::complex<double>(0, 2), std::complex<double>(1, 1);
  const auto u = normalize_eigenvector(v);
  CHECK(u.norm() == doctest::Approx(1));
  CHECK(u(1).real() > 0);
  CHECK(std::abs(u(1).imag()) < 1e-15);
  // same direction
  CHECK(std::abs(std::abs(u.dot(v)) - v.norm()) < 1e-12);
  CHECK_THROWS_AS(normalize_eigenvector(ComplexVector<double>::Zero(2)), std::invalid_argument);
}

TEST_CASE("analyze_operator") {
  SUBCASE("diagonal operator") {
    Mat d = Mat::Zero(3, 3);
    d.diagonal() << -1, 0.5, -0.2;
    Vec z0(3);
    z0 << 1, -3, 2;
    const auto r = analyze_operator(d, z0, 0.1, 3);
    CHECK(r.lambda_star.real() == doctest::Approx(0.5));
    CHECK_FALSE(r.stable);
    CHECK(r.a_star == doctest::Approx(3));
    CHECK(r.a_star_nonzero);
    CHECK(r.basis_dim == 3);
    CHECK(r.beta == 0.1);
  }
  SUBCASE("orthogonal initial state") {
    Mat d = Mat::Zero(2, 2);
    d.diagonal() << -1, -0.5;
    Vec z0(2);
    z0 << 1, 0;
    const auto r = analyze_operator(d, z0, 0, 2);
    CHECK(r.stable);
    CHECK(r.a_star < 1e-15);
    CHECK_FALSE(r.a_star_nonzero);
  }
  SUBCASE("complex pair picks the positive imaginary part") {
    Mat a(2, 2);
    a << -0.1, 1, -1, -0.1;
    const auto r = analyze_operator(a, Vec(Vec::Ones(2)), 0.2, 1);
    CHECK(r.lambda_star.real() == doctest::Approx(-0.1));
    CHECK(r.lambda_star.imag() == doctest::Approx(1));
  }
  SUBCASE("random operators") {
    std::mt19937_64 rng(50);
    for (int trial = 0; trial < 100; ++trial) {
      const Index d = 2 + static_cast<Index>(rng() % 10);
      const Mat a = oracle::gaussian(d, d, rng);
      const Vec z0 = oracle::gaussian(d, rng);
      const auto r = analyze_operator(a, z0, 0, d);
      const auto all = reduced_spectrum(a);
      for (Index i = 0; i < d; ++i) CHECK(all(i).real() <= r.lambda_star.real() + 1e-12);
      const Eigen::VectorXcd ac = a.cast<std::complex<double>>() * r.xi_star;
      CHECK((ac - r.lambda_star * r.xi_star).norm() < 1e-9 * (1 + a.norm()));
      CHECK(r.xi_star.norm() == doctest::Approx(1));
      CHECK(r.stable == (r.lambda_star.real() < 0));
      CHECK(r.a_star <= z0.norm() * (1 + 1e-12));
    }
  }
  SUBCASE("size mismatch") {
    CHECK_THROWS_AS(analyze_operator(Mat::Identity(2, 2), Vec::Ones(3), 0, 1), DimensionError);
  }
}

TEST_CASE("structure-preserving reduced operators are never unstable") {
  SUBCASE("undamped spectrum is imaginary") {
    const auto p = small_params(0);
    const auto ens = wave::generate_snapshots(p);
    for (Index k : {2, 5, 10, 20}) {
      const auto r = psd_stability(p, k, ens);
      CHECK(std::abs(r.lambda_star.real()) < 1e-8);
      CHECK(r.basis_dim == k);
    }
  }
  SUBCASE("damped spectrum stays in the closed left half plane") {
    for (double beta : {0.1, 1.0, 10.0}) {
      const auto p = small_params(beta);
      const auto ens = wave::generate_snapshots(p);
      for (Index k : {2, 5, 10, 20}) CHECK(psd_stability(p, k, ens).lambda_star.real() <= 1e-8);
    }
  }
}

TEST_CASE("identity basis recovers the full spectrum") {
  auto p = small_params(0.3);
  p.n = 10;
  p.T = 20;
  const auto ens = wave::generate_snapshots(p);
  // 41 snapshots of a 20-dimensional state span everything
  const auto r = table2_cell(p, 0.3, 20, ens);
  const auto psd = psd_stability(p, 10, ens);
  double best = -1e300;
  for (const auto& l : wave::full_model_eigenvalues(p)) best = std::max(best, l.real());
  CHECK(r.lambda_star.real() == doctest::Approx(best).epsilon(1e-8));
  CHECK(psd.lambda_star.real() == doctest::Approx(best).epsilon(1e-8));
}

TEST_CASE("POD cells reject mismatched snapshots") {
  const auto p = small_params(0.1);
  const auto ens = wave::generate_snapshots(p);
  auto other = p;
  other.n = 20;
  CHECK_THROWS_AS(table2_cell(other, 0.1, 4, ens), DimensionError);
  CHECK_THROWS_AS(table2_cell(p, 0.1, 1000, ens), DimensionError);
  const SnapshotEnsemble<double> zero(Mat::Zero(80, 3), {0.0, 1.0, 2.0});
  CHECK_THROWS_AS(table2_cell(p, 0.1, 2, zero), DegenerateDataError);
}
