#include "support.hpp"

#include "safeloop/sdp_io.hpp"
#include "safeloop/sim.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace safeloop;
using namespace safeloop::test;

namespace {

// A problem with one symmetric variable Q and a coordinate vector holding `value`.
struct OneVariable {
  SdpProblem problem;
  Variable Q;
  Vector x;

  OneVariable(const Matrix& value) {
    Q = problem.add_symmetric("Q", value.rows());
    x = Vector::Zero(problem.num_scalars());
    Q.scatter(value, x);
  }
};

}  // namespace

TEST(BuildE1, ScalarBlocks) {
  const double q = 0.7;
  OneVariable v(scalar(q));
  const Matrix E1 = build_E1(scalar(-1), scalar(1), AffineExpr::of(v.Q)).evaluate(v.x);
  Matrix expected(3, 3);
  expected << -2 * q, 0, q, 0, 0, 0, q, 0, 0;
  EXPECT_TRUE(E1.isApprox(expected, 1e-15));
}

TEST(BuildE1, Dimensions) {
  const AffineExpr e = build_E1(-Matrix::Identity(2, 2), Matrix::Ones(2, 4), AffineExpr::identity(2));
  EXPECT_EQ(e.rows(), 7);
  EXPECT_EQ(e.cols(), 7);
}

TEST(BuildE1, ZeroSystemGivesZero) {
  OneVariable v(Matrix::Identity(2, 2));
  EXPECT_TRUE(build_E1(Matrix::Zero(2, 2), Matrix::Zero(2, 3), AffineExpr::of(v.Q)).evaluate(v.x).isZero(0.0));
}

TEST(BuildE1, DimensionMismatchThrows) {
  EXPECT_THROW(build_E1(Matrix::Zero(2, 2), Matrix::Zero(3, 1), AffineExpr::identity(2)), Error);
}

TEST(BuildF, IdentityShape) {
  const Matrix F = build_F(AffineExpr::identity(2), 4).constant();
  EXPECT_EQ(F, Matrix(diag({1, 1, -1, 0, 0, 0, 0})));
}

TEST(BuildF, Scalar) {
  EXPECT_EQ(build_F(AffineExpr::scalar(0.3), 1).constant(), Matrix(diag({0.3, -1, 0})));
}

TEST(BuildF, CaseStudyInverseX) {
  const Matrix F = build_F(AffineExpr(published_eta().X.inverse()), 4).constant();
  EXPECT_NEAR(F(0, 0), 0.03495, 1e-5);
  EXPECT_NEAR(F(1, 1), 0.03125, 1e-5);
  EXPECT_EQ(F(2, 2), -1.0);
  EXPECT_TRUE(F.bottomRightCorner(4, 4).isZero(0.0));
}

TEST(BuildS, CaseStudyAttackShape) {
  const Matrix S = build_S(AffineExpr(case_study_Ra()), 2).constant();
  EXPECT_EQ(S.rows(), 7);
  EXPECT_EQ(S(2, 2), 1.0);
  EXPECT_TRUE(S.bottomRightCorner(4, 4).isApprox(-case_study_Ra()));
  EXPECT_TRUE(S.topLeftCorner(2, 2).isZero(0.0));
}

TEST(BuildS, Scalar) { EXPECT_EQ(build_S(AffineExpr::scalar(1.0), 1).constant(), Matrix(diag({0, 1, -1}))); }

TEST(BuildS, VanishesOnAttackBoundary) {
  std::mt19937_64 rng(1);
  const Matrix Ra = case_study_Ra();
  const Matrix S = build_S(AffineExpr(Ra), 2).constant();
  for (int i = 0; i < 10; ++i) {
    Vector a = random_matrix(4, 1, rng);
    a /= std::sqrt(a.dot(Ra * a));
    Vector v(7);
    v << 0, 0, 1, a;
    EXPECT_NEAR(v.dot(-S * v), 0.0, 1e-14);
  }
}

TEST(BuildS, RejectsNonSquare) { EXPECT_THROW(build_S(AffineExpr(Matrix::Ones(2, 3)), 2), Error); }

TEST(BuildE2bf, ZeroVariablesLeaveAffinePart) {
  const HatSystem h = case_study_hat(1.0);
  SynthesisVars zero{Matrix::Zero(2, 2), Matrix::Zero(2, 2), Matrix::Zero(2, 2),
                     Matrix::Zero(2, 1), Matrix::Zero(1, 2), Matrix::Zero(1, 1)};
  const EtaExprs eta = EtaExprs::of(zero);
  Matrix A(4, 4);
  A << Matrix::Zero(2, 2), h.Ahat, Matrix::Zero(2, 4);
  Matrix B(4, 4);
  B << h.B1, Matrix::Zero(2, 4);
  EXPECT_EQ(build_A_eta(eta, h).constant(), A);
  EXPECT_EQ(build_B_eta(eta, h).constant(), B);
}

TEST(BuildE2bf, CaseStudyLeadingBlock) {
  const Matrix A = build_A_eta(EtaExprs::of(published_eta()), case_study_hat(1.0)).constant();
  EXPECT_NEAR(A(0, 0), -107.1158, 1e-9);
  EXPECT_NEAR(A(1, 1), -31.9965, 1e-9);
  EXPECT_EQ(A(0, 1), 0.0);
  EXPECT_EQ(A(1, 0), 0.0);
}

TEST(BuildE2bf, DimensionsAndAffinity) {
  SdpProblem p;
  const HatSystem h = case_study_hat(1.0);
  const EtaVars v = declare_eta(p, h);
  const AffineExpr e = build_E2bf(EtaExprs::of(v), h);
  EXPECT_EQ(e.rows(), 9);
  // Affine: the midpoint of two evaluations is the evaluation at the midpoint.
  std::mt19937_64 rng(2);
  const Vector x0 = random_matrix(p.num_scalars(), 1, rng);
  const Vector x1 = random_matrix(p.num_scalars(), 1, rng);
  EXPECT_TRUE((0.5 * (e.evaluate(x0) + e.evaluate(x1))).isApprox(e.evaluate(0.5 * (x0 + x1)), 1e-13));
}

TEST(BuildPeta, IdentityIsSingular) {
  SynthesisVars v = published_eta();
  v.X = Matrix::Identity(2, 2);
  v.Y = Matrix::Identity(2, 2);
  EXPECT_NEAR(min_eigenvalue(build_P_eta(EtaExprs::of(v)).constant()), 0.0, 1e-14);
}

TEST(BuildPeta, CaseStudyIsPositiveDefinite) {
  const SynthesisVars v = published_eta();
  EXPECT_TRUE(is_pd(build_P_eta(EtaExprs::of(v)).constant()));
  const Matrix schur = v.X - v.Y.inverse();
  EXPECT_NEAR(schur(0, 0), 28.6109 - 1 / 3.9840, 1e-12);
  EXPECT_NEAR(schur(1, 1), 31.9965 - 1 / 0.1164, 1e-12);
}

TEST(BuildSbf, SameAsAnalysisForm) {
  const AffineExpr Ra(case_study_Ra());
  // same blocks, with the leading zero block sized for both state halves
  EXPECT_EQ(build_Sbf(Ra, 2).constant(), build_S(Ra, 4).constant());
}

TEST(BuildFbf, LeadingBlockIsPeta) {
  const EtaExprs eta = EtaExprs::of(published_eta());
  const Matrix F = build_Fbf(eta, 4).constant();
  EXPECT_EQ(F.rows(), 9);
  EXPECT_EQ(F.topLeftCorner(4, 4), build_P_eta(eta).constant());
  EXPECT_EQ(F(4, 4), -1.0);
}

TEST(ContainmentJL, CenteredCaseStudyBlocks) {
  OneVariable v(published_eta().X);
  const auto [J, L] = build_containment_JL(AffineExpr::of(v.Q), case_study_safe());
  const Matrix j = J.evaluate(v.x);
  const Matrix X = published_eta().X;
  EXPECT_TRUE(j.topLeftCorner(2, 2).isZero(0.0));
  EXPECT_TRUE(j.block(0, 2, 2, 1).isZero(0.0));
  EXPECT_TRUE(j.topRightCorner(2, 2).isApprox(-X));
  EXPECT_EQ(j(2, 2), -1.0);
  EXPECT_TRUE(j.bottomRightCorner(2, 2).isApprox(-Matrix::Identity(2, 2) / 0.022, 1e-14));
  const Matrix l = L.evaluate(v.x);
  EXPECT_TRUE(l.topLeftCorner(2, 2).isApprox(X));
  EXPECT_EQ(l(2, 2), -1.0);
}

TEST(ContainmentJL, ScalarReducesToRadiusCondition) {
  for (double x : {0.5, 2.0, 7.0}) {
    for (double rx : {0.25, 0.99, 1.01, 3.0}) {
      const double r = rx / x;
      const auto [J, L] = build_containment_JL(AffineExpr::scalar(x), Ellipsoid(scalar(r)));
      const bool nsd = max_eigenvalue((J - 1.0 * L).constant()) <= 1e-12;
      EXPECT_EQ(nsd, rx <= 1.0) << "x = " << x << ", r x = " << rx;
      EXPECT_EQ(nsd, contains(Ellipsoid(scalar(1.0 / x)), Ellipsoid(scalar(r))).contained);
    }
  }
}

TEST(ContainmentJL, ZeroXIsCenterMembership) {
  for (double c : {0.5, 1.5}) {
    Vector center(2);
    center << c, 0;
    const auto [J, L] = build_containment_JL(AffineExpr::zero(2, 2), Ellipsoid(Matrix::Identity(2, 2), center));
    EXPECT_EQ(max_eigenvalue(J.constant()) <= 0.0, c <= 1.0);
  }
}

TEST(ContainmentJL, RejectsSingularSafeShape) {
  EXPECT_THROW(build_containment_JL(AffineExpr::identity(2), Ellipsoid(diag({1, 0}))), Error);
}

TEST(LmiProperty, BuildersAreSymmetric) {
  std::mt19937_64 rng(3);
  for (int i = 0; i < 20; ++i) {
    const Index n = 1 + i % 3, na = 1 + i % 4;
    const HatSystem h = random_hat(n, na, rng);
    SdpProblem p;
    const EtaVars v = declare_eta(p, h);
    const Variable Q = p.add_symmetric("Q", n);
    const Variable R = p.add_symmetric("R", na);
    const Vector x = random_matrix(p.num_scalars(), 1, rng);
    const EtaExprs eta = EtaExprs::of(v);
    const auto [J, L] = build_containment_JL(eta.X, Ellipsoid(random_pd(n, rng), random_matrix(n, 1, rng)));
    for (const AffineExpr& e :
         {build_E1(h.Ahat, h.B1, AffineExpr::of(Q)), build_F(AffineExpr::of(Q), na), build_S(AffineExpr::of(R), n),
          build_E2bf(eta, h), build_Fbf(eta, na), build_Sbf(AffineExpr::of(R), n), build_P_eta(eta), J, L}) {
      const Matrix m = e.evaluate(x);
      EXPECT_LE((m - m.transpose()).cwiseAbs().maxCoeff(), 1e-12);
    }
  }
}

TEST(LmiProperty, E1QuadraticFormIsLyapunovDerivative) {
  std::mt19937_64 rng(4);
  const Matrix A = random_stable(3, rng, 0.5);
  const Matrix B = random_matrix(3, 2, rng);
  const Matrix Q = random_pd(3, rng);
  const Matrix E1 = build_E1(A, B, AffineExpr(Q)).constant();
  const ClosedLoop cl = loop_of(A, B);
  Vector dir(2);
  dir << 0.6, -0.8;
  AttackPolicy policy = AttackPolicy::constant(Matrix::Identity(2, 2), dir);
  const double h = 5e-4;
  const Trajectory tr = integrate(cl, policy, random_matrix(3, 1, rng), 1.0, h);
  auto V = [&](const Vector& z) { return z.dot(Q * z); };
  for (std::size_t k = 1; k + 1 < tr.states.size(); k += 97) {
    const Vector& z = tr.states[k];
    Vector s(6);
    s << z, 1.0, tr.attacks[k];
    const double form = s.dot(E1 * s);
    const double fd = (V(tr.states[k + 1]) - V(tr.states[k - 1])) / (2 * h);
    EXPECT_NEAR(fd, form, 1e-6 * std::max(1.0, std::abs(form))) << "t = " << tr.times[k];
  }
}

TEST(SdpSolve, MinimizeScalarAboveOne) {
  SdpProblem p;
  const Variable q = p.add_scalar("q");
  p.add_psd(AffineExpr::of(q) - AffineExpr::scalar(1.0), "q >= 1");
  p.minimize(AffineExpr::of(q));
  const SdpSolution s = sdp_solve(p);
  ASSERT_TRUE(s.feasible()) << s.message;
  EXPECT_NEAR(s.scalar("q"), 1.0, 1e-7);
  EXPECT_GE(s.min_eigenvalue, -kFeasibilityTolerance);
}

TEST(SdpSolve, ConstantNegativeConstraintIsInfeasible) {
  SdpProblem p;
  p.add_psd(AffineExpr(-Matrix::Identity(2, 2)), "-I >= 0");
  const SdpSolution s = sdp_solve(p);
  EXPECT_EQ(s.status, SdpStatus::Infeasible);
  EXPECT_FALSE(s.message.empty());
}

TEST(SdpSolve, ScalarInvarianceOptimum) {
  // -E1 - F - S >= 0 for x' = -x + a, |a| <= 1 at alpha = beta = 1: q <= 1.
  SdpProblem p;
  const Variable q = p.add_symmetric("Q", 1);
  const AffineExpr Q = AffineExpr::of(q);
  p.add_psd(-build_E1(scalar(-1), scalar(1), Q) - build_F(Q, 1) - build_S(AffineExpr::scalar(1.0), 1), "inv");
  p.add_psd(Q, "Q >= 0");
  p.maximize(Q);
  const SdpSolution s = sdp_solve(p);
  ASSERT_TRUE(s.feasible()) << s.message;
  EXPECT_NEAR(s.scalar("Q"), 1.0, 1e-6);
}

TEST(SdpSolve, DeterministicAcrossCalls) {
  SdpProblem p;
  const Variable Q = p.add_symmetric("Q", 2);
  p.add_psd(-build_E1(-Matrix::Identity(2, 2), Matrix::Identity(2, 2), AffineExpr::of(Q)) -
                build_F(AffineExpr::of(Q), 2) - 0.5 * build_S(AffineExpr::identity(2), 2),
            "inv");
  p.maximize(AffineExpr::of(Q).trace());
  const SdpSolution a = sdp_solve(p), b = sdp_solve(p);
  ASSERT_TRUE(a.feasible()) << to_string(a.status) << ": " << a.message;
  EXPECT_EQ(a.x, b.x);
  EXPECT_EQ(a.newton_steps, b.newton_steps);
}

TEST(SdpSolve, ReportsConstraintEigenvalues) {
  SdpProblem p;
  const Variable q = p.add_scalar("q");
  p.add_psd(AffineExpr::of(q) - AffineExpr::scalar(1.0), "a");
  p.add_psd(AffineExpr::scalar(3.0) - AffineExpr::of(q), "b");
  const SdpSolution s = sdp_solve(p);
  ASSERT_TRUE(s.feasible());
  ASSERT_EQ(s.constraint_min_eigenvalues.size(), 2u);
  EXPECT_GT(s.min_eigenvalue, 0.0);
}

TEST(SdpSolve, RejectsAsymmetricConstraint) {
  SdpProblem p;
  Matrix m(2, 2);
  m << 1, 2, 0, 1;
  EXPECT_THROW(p.add_psd(AffineExpr(m), "asym"), Error);
}

TEST(SdpDump, RoundTripPreservesProblemAndSolution) {
  SdpProblem p;
  const HatSystem h = case_study_hat(2.5);
  p = synthesis_problem(h, case_study_safe(), case_study_Ra(), SynthesisScalars{}, Objective::Feasibility);
  const nlohmann::json j = problem_to_json(p);
  const SdpProblem back = problem_from_json(j);
  EXPECT_EQ(problem_to_json(back), j);
  EXPECT_EQ(back.num_scalars(), p.num_scalars());
  EXPECT_EQ(back.constraints().size(), p.constraints().size());
  SdpOptions o;
  o.radius = 1e4;
  const SdpSolution a = sdp_solve(p, o), b = sdp_solve(back, o);
  EXPECT_EQ(a.status, b.status);
  EXPECT_EQ(a.x, b.x);
}
