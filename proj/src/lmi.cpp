#include "safeloop/lmi.hpp"

namespace safeloop {
namespace {

using Z = AffineExpr;

void require_square(const AffineExpr& e, const char* what) {
  if (e.rows() != e.cols())
    throw Error(ErrorKind::DimensionMismatch, std::string(what) + " must be square, got " + shape_string(e.constant()));
}

}  // namespace

AffineExpr build_E1(const Matrix& A, const Matrix& B, const AffineExpr& Q) {
  require_square(Q, "Q");
  const Index n = Q.rows();
  require_dims(A.rows() == n && A.cols() == n, "A", A, "Q", Q.constant());
  require_dims(B.rows() == n, "B", B, "Q", Q.constant());
  const Index na = B.cols();
  const AffineExpr QB = Q * B;
  return Z::blocks({{A.transpose() * Q + Q * A, Z::zero(n, 1), QB},
                    {Z::zero(1, n), Z::zero(1, 1), Z::zero(1, na)},
                    {QB.transpose(), Z::zero(na, 1), Z::zero(na, na)}});
}

AffineExpr build_F(const AffineExpr& Q, Index na) {
  require_square(Q, "Q");
  const Index n = Q.rows();
  return Z::blocks({{Q, Z::zero(n, 1), Z::zero(n, na)},
                    {Z::zero(1, n), Z::scalar(-1.0), Z::zero(1, na)},
                    {Z::zero(na, n), Z::zero(na, 1), Z::zero(na, na)}});
}

AffineExpr build_S(const AffineExpr& Ra, Index n) {
  require_square(Ra, "R_a");
  const Index na = Ra.rows();
  return Z::blocks({{Z::zero(n, n), Z::zero(n, 1), Z::zero(n, na)},
                    {Z::zero(1, n), Z::scalar(1.0), Z::zero(1, na)},
                    {Z::zero(na, n), Z::zero(na, 1), -Ra}});
}

EtaVars declare_eta(SdpProblem& problem, const HatSystem& hat) {
  hat.validate();
  const Index n1 = hat.n1();
  return {problem.add_symmetric("X", n1),           problem.add_symmetric("Y", n1),
          problem.add_matrix("A", n1, n1),          problem.add_matrix("B", n1, hat.my()),
          problem.add_matrix("C", hat.mu(), n1),    problem.add_matrix("D", hat.mu(), hat.my())};
}

SynthesisVars SynthesisVars::from(const SdpSolution& s) {
  return {s.value("X"), s.value("Y"), s.value("A"), s.value("B"), s.value("C"), s.value("D")};
}

EtaExprs EtaExprs::of(const EtaVars& v) {
  return {Z::of(v.X), Z::of(v.Y), Z::of(v.A), Z::of(v.B), Z::of(v.C), Z::of(v.D)};
}

EtaExprs EtaExprs::of(const SynthesisVars& v) { return {Z(v.X), Z(v.Y), Z(v.A), Z(v.B), Z(v.C), Z(v.D)}; }

AffineExpr build_A_eta(const EtaExprs& eta, const HatSystem& hat) {
  hat.validate();
  const Matrix& Ah = hat.Ahat;
  return Z::blocks({{Ah * eta.X + hat.Bhat * eta.C, Z(Ah) + hat.Bhat * eta.D * hat.Chat},
                    {eta.A, eta.Y * Ah + eta.B * hat.Chat}});
}

AffineExpr build_B_eta(const EtaExprs& eta, const HatSystem& hat) {
  return Z::blocks({{Z(hat.B1)}, {eta.Y * hat.B1}});
}

AffineExpr build_P_eta(const EtaExprs& eta) {
  const Index n1 = eta.X.rows();
  return Z::blocks({{eta.X, Z::identity(n1)}, {Z::identity(n1), eta.Y}});
}

AffineExpr build_E2bf(const EtaExprs& eta, const HatSystem& hat) {
  const AffineExpr A = build_A_eta(eta, hat);
  const AffineExpr B = build_B_eta(eta, hat);
  const Index n = A.rows(), na = B.cols();
  return Z::blocks({{A.transpose() + A, Z::zero(n, 1), B},
                    {Z::zero(1, n), Z::zero(1, 1), Z::zero(1, na)},
                    {B.transpose(), Z::zero(na, 1), Z::zero(na, na)}});
}

AffineExpr build_Fbf(const EtaExprs& eta, Index na) { return build_F(build_P_eta(eta), na); }

AffineExpr build_Sbf(const AffineExpr& Ra, Index n1) { return build_S(Ra, 2 * n1); }

std::pair<AffineExpr, AffineExpr> build_containment_JL(const AffineExpr& X, const Ellipsoid& safe) {
  require_square(X, "X");
  const Index n = X.rows();
  if (safe.dim() != n)
    throw Error(ErrorKind::DimensionMismatch, "safe set has dimension " + std::to_string(safe.dim()) +
                                                  ", X is " + shape_string(X.constant()));
  const Matrix& R = safe.shape();
  Eigen::FullPivLU<Matrix> lu(R);
  if (!lu.isInvertible() || !is_pd(R))
    throw Error(ErrorKind::Singular, "safe-set shape must be invertible for synthesis; restrict the safe set to "
                                     "the certified coordinates first");
  const Vector& c = safe.center();
  const Matrix Rinv = symmetrized(lu.inverse());
  const Vector Rc = R * c;
  const AffineExpr XRc = X * Matrix(Rc);
  const AffineExpr J = Z::blocks({{Z::zero(n, n), -XRc, -X},
                                  {-XRc.transpose(), Z::scalar(c.dot(Rc) - 1.0), Z::zero(1, n)},
                                  {-X, Z::zero(n, 1), Z(Matrix(-Rinv))}});
  const AffineExpr L = Z::blocks({{X, Z::zero(n, 1), Z::zero(n, n)},
                                  {Z::zero(1, n), Z::scalar(-1.0), Z::zero(1, n)},
                                  {Z::zero(n, n), Z::zero(n, 1), Z::zero(n, n)}});
  return {J, L};
}

}  // namespace safeloop
