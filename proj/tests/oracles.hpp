#pragma once

// Independent reference computations used only by the tests.

#include <cmath>
#include <random>

#include <Eigen/Dense>

#include "psd/types.hpp"

namespace oracle {

using psd::Index;
using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

inline Mat gaussian(Index rows, Index cols, std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  Mat m(rows, cols);
  for (Index j = 0; j < cols; ++j)
    for (Index i = 0; i < rows; ++i) m(i, j) = g(rng);
  return m;
}

inline Vec gaussian(Index n, std::mt19937_64& rng) { return gaussian(n, 1, rng).col(0); }

/// n x k with orthonormal columns (thin Q of a Gaussian matrix).
inline Mat orthonormal(Index n, Index k, std::mt19937_64& rng) {
  Eigen::HouseholderQR<Mat> qr(gaussian(n, k, rng));
  return qr.householderQ() * Mat::Identity(n, k);
}

/// Blocks of a random symplectic 2n x 2k matrix with A_qp = 0 that is not a
/// cotangent lift: A_qq = Phi R, A_pp = Phi R^{-T} + (I - Phi Phi^T) W,
/// A_pq = Phi R^{-T} S + (I - Phi Phi^T) V with S symmetric.
struct GeneralBlocks {
  Mat qq, pq, pp;
};

inline GeneralBlocks general_symplectic(Index n, Index k, std::mt19937_64& rng) {
  const Mat phi = orthonormal(n, k, rng);
  const Mat r = Mat::Identity(k, k) + 0.3 * gaussian(k, k, rng);
  const Mat r_inv_t = r.inverse().transpose();
  Mat s = gaussian(k, k, rng);
  s = 0.5 * (s + s.transpose()).eval();
  const Mat comp = Mat::Identity(n, n) - phi * phi.transpose();
  return {phi * r, phi * r_inv_t * s + comp * gaussian(n, k, rng),
          phi * r_inv_t + comp * gaussian(n, k, rng)};
}

/// Dense J_2n assembled entry by entry.
inline Mat poisson(Index n) {
  Mat j = Mat::Zero(2 * n, 2 * n);
  for (Index i = 0; i < n; ++i) {
    j(i, n + i) = 1;
    j(n + i, i) = -1;
  }
  return j;
}

/// exp(A) by scaling and squaring of a long-double Taylor series.
inline Mat expm(const Mat& a) {
  using LMat = Eigen::Matrix<long double, Eigen::Dynamic, Eigen::Dynamic>;
  LMat x = a.cast<long double>();
  int squarings = 0;
  const long double norm = x.cwiseAbs().rowwise().sum().maxCoeff();
  while (std::ldexp(norm, -squarings) > 0.25L) ++squarings;
  x /= std::ldexp(1.0L, squarings);
  LMat term = LMat::Identity(a.rows(), a.cols());
  LMat sum = term;
  for (int i = 1; i <= 30; ++i) {
    term = (term * x / static_cast<long double>(i)).eval();
    sum += term;
  }
  for (int i = 0; i < squarings; ++i) sum = (sum * sum).eval();
  return sum.cast<double>();
}

/// Central-difference gradient.
template <typename F>
Vec fd_gradient(F&& f, const Vec& x, double h = 1e-6) {
  Vec g(x.size());
  Vec xp = x, xm = x;
  for (Index i = 0; i < x.size(); ++i) {
    const double step = h * std::max(1.0, std::abs(x(i)));
    xp(i) = x(i) + step;
    xm(i) = x(i) - step;
    g(i) = (f(xp) - f(xm)) / (2 * step);
    xp(i) = xm(i) = x(i);
  }
  return g;
}

/// Singular values from the eigenvalues of M^T M or M M^T (whichever is smaller), sorted
/// nonincreasing and padded to min(rows, cols).
inline Vec singular_values(const Mat& m) {
  const Mat g = m.rows() <= m.cols() ? Mat(m * m.transpose()) : Mat(m.transpose() * m);
  Eigen::SelfAdjointEigenSolver<Mat> es(g);
  Vec ev = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  std::sort(ev.data(), ev.data() + ev.size(), std::greater<>());
  return ev;
}

}  // namespace oracle
