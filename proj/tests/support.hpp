#pragma once

#include "safeloop/analysis.hpp"
#include "safeloop/ellipsoid.hpp"
#include "safeloop/lmi.hpp"
#include "safeloop/synthesis.hpp"
#include "safeloop/sysmodel.hpp"

#include <cmath>
#include <random>

namespace safeloop::test {

inline Matrix diag(std::initializer_list<double> v) {
  Vector d(static_cast<Index>(v.size()));
  Index i = 0;
  for (double x : v) d(i++) = x;
  return d.asDiagonal();
}

inline Matrix scalar(double v) { return Matrix::Constant(1, 1, v); }

/// x' = -x + a with |a| <= 1.
inline ClosedLoop scalar_loop() {
  return ClosedLoop(scalar(-1), Matrix(1, 0), Matrix(0, 1), Matrix(0, 0), scalar(1));
}

inline ClosedLoop loop_of(const Matrix& A, const Matrix& B) {
  return ClosedLoop(A, Matrix(A.rows(), 0), Matrix(0, A.rows()), Matrix(0, 0), B);
}

inline ScalarGrid alpha_grid(std::vector<double> alphas, std::vector<double> deltas = {1.0}) {
  ScalarGrid g = ScalarGrid::defaults();
  g.alphas = std::move(alphas);
  g.betas = g.alphas;
  g.deltas = std::move(deltas);
  return g;
}

// Reduced case-study model. The attack input matrix is not published; the
// scale is a parameter so both the stated and the shipped choice are reachable.
inline HatSystem case_study_hat(double attack_gain) {
  HatSystem h;
  h.Ahat = -Matrix::Identity(2, 2);
  h.Bhat = Matrix(2, 1);
  h.Bhat << 1, 0;
  h.Chat = Matrix(1, 2);
  h.Chat << 1, 0;
  h.B1 = Matrix(2, 4);
  h.B1 << Matrix::Identity(2, 2), Matrix::Identity(2, 2);
  h.B1 *= attack_gain;
  return h;
}

inline Matrix case_study_Ra() { return diag({0.5, 1.0, 0.4, 0.7}); }
inline Ellipsoid case_study_safe() { return Ellipsoid(0.022 * Matrix::Identity(2, 2)); }

/// Published solution of the case study, four decimals.
inline SynthesisVars published_eta() {
  SynthesisVars v;
  v.X = diag({28.6109, 31.9965});
  v.Y = diag({3.9840, 0.1164});
  v.A = diag({-26.8308, -0.6765});
  v.B = Matrix(2, 1);
  v.B << -200.3492, 0;
  v.C = Matrix(1, 2);
  v.C << -78.5049, 0;
  v.D = scalar(-26.8308);
  return v;
}

inline Matrix random_matrix(Index r, Index c, std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> n(0.0, scale);
  Matrix m(r, c);
  for (Index j = 0; j < c; ++j)
    for (Index i = 0; i < r; ++i) m(i, j) = n(rng);
  return m;
}

/// Positive definite with eigenvalues spread over a few decades.
inline Matrix random_pd(Index n, std::mt19937_64& rng) {
  Eigen::HouseholderQR<Matrix> qr(random_matrix(n, n, rng));
  const Matrix U = qr.householderQ();
  std::uniform_real_distribution<double> logu(-1.5, 1.5);
  Vector ev(n);
  for (Index i = 0; i < n; ++i) ev(i) = std::pow(10.0, logu(rng));
  return symmetrized(U * ev.asDiagonal() * U.transpose());
}

/// A - (max Re lambda + margin) I, so every eigenvalue has real part <= -margin.
inline Matrix random_stable(Index n, std::mt19937_64& rng, double margin) {
  Matrix A = random_matrix(n, n, rng);
  const double shift = A.eigenvalues().real().maxCoeff() + margin;
  A -= shift * Matrix::Identity(n, n);
  return A;
}

inline HatSystem random_hat(Index n1, Index na, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.5, 1.5);
  HatSystem h;
  h.Ahat = random_stable(n1, rng, u(rng));
  h.Bhat = random_matrix(n1, 1, rng);
  h.Chat = random_matrix(1, n1, rng);
  h.B1 = random_matrix(n1, na, rng, 0.5);
  return h;
}

}  // namespace safeloop::test
