#include "support.hpp"

#include "safeloop/sim.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace safeloop;
using namespace safeloop::test;

namespace {

struct Design {
  SynthesisResult result;
  Recovery recovery;
  SynthesisCertificate cert;
};

Design design(const HatSystem& hat, const Ellipsoid& safe, const std::optional<Matrix>& Ra,
              const SynthesisScalars& scalars, Objective objective, const std::optional<Matrix>& M = {}) {
  Design d;
  d.result = synthesize(hat, safe, Ra, scalars, objective);
  if (!d.result.feasible) return d;
  d.recovery = recover_controller(*d.result.eta, hat, M);
  d.cert = certify(hat, d.recovery.controller, d.result.Ra, safe, d.result.alpha, d.result.beta, d.recovery.data.P,
                   d.result.eta->X);
  return d;
}

SynthesisScalars case_study_scalars() { return {0.25, std::nullopt, 0.99}; }

HatSystem scalar_hat(double bhat) { return {scalar(-1), scalar(bhat), scalar(1), scalar(1)}; }

double rel(const Matrix& a, const Matrix& b) { return relative_error(a, b); }

// Pi_1 = [[X, I], [M^T, 0]]
Matrix pi1(const Matrix& X, const Matrix& M) {
  const Index n = X.rows();
  Matrix P(2 * n, 2 * n);
  P << X, Matrix::Identity(n, n), M.transpose(), Matrix::Zero(n, n);
  return P;
}

// The invariance matrix of the analysis form on the full loop.
Matrix analysis_form(const ClosedLoop& cl, const Matrix& P, const Matrix& Ra, double alpha, double beta) {
  const Index n = cl.dim(), na = cl.na();
  return -build_E1(cl.A(), cl.B(), AffineExpr(P)).constant() - alpha * build_F(AffineExpr(P), na).constant() -
         beta * build_S(AffineExpr(Ra), n).constant();
}

}  // namespace

TEST(RecoverController, PublishedCaseStudyValues) {
  const Recovery r = recover_controller(published_eta(), case_study_hat(1.0), Matrix::Identity(2, 2));
  const SecondaryController& k = r.controller;
  EXPECT_LT(rel(r.data.N, diag({-112.9854, -2.7259})), 1e-2);
  EXPECT_NEAR(k.D(0, 0), -26.8308, 1e-12);
  Matrix C2(1, 2);
  C2 << 689.1488, 0;
  EXPECT_LT(rel(k.C, C2), 1e-2);
  Matrix B2(2, 1);
  B2 << 0.8271, 0;
  EXPECT_LT(rel(k.B, B2), 1e-2);
  EXPECT_LT(rel(k.A, diag({-27.2049, -1.1187})), 1e-2);
}

TEST(RecoverController, ZeroVariablesGiveZeroController) {
  const HatSystem h = case_study_hat(1.0);
  SynthesisVars v;
  v.X = diag({2.0, 3.0});
  v.Y = diag({0.1, 0.2});
  const Matrix M = Matrix::Identity(2, 2) - v.X * v.Y;  // N = I
  v.A = v.Y * h.Ahat * v.X;
  v.B = Matrix::Zero(2, 1);
  v.C = Matrix::Zero(1, 2);
  v.D = Matrix::Zero(1, 1);
  const Recovery r = recover_controller(v, h, M);
  EXPECT_TRUE(r.data.N.isApprox(Matrix::Identity(2, 2), 1e-14));
  EXPECT_LE(r.controller.A.cwiseAbs().maxCoeff(), 1e-14);
  EXPECT_LE(r.controller.B.cwiseAbs().maxCoeff(), 1e-14);
  EXPECT_LE(r.controller.C.cwiseAbs().maxCoeff(), 1e-14);
  EXPECT_LE(r.controller.D.cwiseAbs().maxCoeff(), 1e-14);
}

TEST(RecoverController, LyapunovMatrixSatisfiesCongruence) {
  const SynthesisVars eta = published_eta();
  const HatSystem h = case_study_hat(1.0);
  const Recovery r = recover_controller(eta, h);
  const Matrix P1 = pi1(eta.X, r.data.M);
  Matrix P2(4, 4);
  P2 << Matrix::Identity(2, 2), eta.Y, Matrix::Zero(2, 2), r.data.N.transpose();
  EXPECT_LT(rel(r.data.P * P1, P2), 1e-12);
  EXPECT_TRUE(is_symmetric(r.data.P, 1e-9 * r.data.P.norm()));
}

TEST(RecoverController, SingularCouplingIsRejected) {
  SynthesisVars v = published_eta();
  v.X = Matrix::Identity(2, 2);
  v.Y = Matrix::Identity(2, 2);
  EXPECT_THROW(recover_controller(v, case_study_hat(1.0)), Error);
}

TEST(RecoverController, RejectsSingularM) {
  EXPECT_THROW(recover_controller(published_eta(), case_study_hat(1.0), Matrix::Zero(2, 2)), Error);
}

TEST(Synthesize, CaseStudyFeasibleAndCertified) {
  const Design d =
      design(case_study_hat(2.5), case_study_safe(), case_study_Ra(), case_study_scalars(), Objective::Feasibility);
  ASSERT_TRUE(d.result.feasible) << d.result.message;
  EXPECT_TRUE(d.cert.passed) << d.cert.failed_check;
  EXPECT_TRUE(d.cert.certificate.contained);
  EXPECT_GE(d.cert.lmi_margin, -kCertificationTolerance);
  EXPECT_GT(d.cert.p_min_eigenvalue, 0.0);
  ASSERT_TRUE(d.cert.projection_error.has_value());
  EXPECT_LT(*d.cert.projection_error, 1e-6);
  EXPECT_GE(d.result.invariance_margin, -kFeasibilityTolerance);
  EXPECT_GE(d.result.containment_margin, -kFeasibilityTolerance);
}

TEST(Synthesize, ScalarToyFeasible) {
  const Design d =
      design(scalar_hat(1.0), Ellipsoid(scalar(0.25)), scalar(1.0), {0.25, std::nullopt, 0.99}, Objective::Feasibility);
  ASSERT_TRUE(d.result.feasible) << d.result.message;
  EXPECT_TRUE(d.cert.passed) << d.cert.failed_check;
}

TEST(Synthesize, SafeSetBelowReachableBoundIsInfeasible) {
  // |x| <= 0.01 cannot be held against |a| <= 1 with bounded gains
  const Ellipsoid tiny(scalar(1e4));
  const SynthesisResult f =
      synthesize(scalar_hat(1.0), tiny, scalar(1.0), {0.25, std::nullopt, 0.99}, Objective::Feasibility);
  const SynthesisResult m = minimize_invariant_volume(scalar_hat(1.0), tiny, scalar(1.0), {0.25, std::nullopt, 0.99});
  EXPECT_FALSE(f.feasible);
  EXPECT_FALSE(m.feasible);
  ASSERT_FALSE(f.points.empty());
  EXPECT_NE(f.points.front().failed, Family::None);
  EXPECT_EQ(f.points.front().failed, m.points.front().failed);
}

TEST(Synthesize, MinTraceAttackReturnsCertifiedShape) {
  SynthesisScalars s = case_study_scalars();
  s.beta = 0.125;
  const Design d = design(case_study_hat(2.5), case_study_safe(), std::nullopt, s, Objective::MinTraceAttack);
  ASSERT_TRUE(d.result.feasible) << d.result.message;
  EXPECT_TRUE(is_pd(d.result.Ra));
  ASSERT_TRUE(d.result.objective.has_value());
  EXPECT_NEAR(*d.result.objective, d.result.Ra.trace(), 1e-9 * d.result.Ra.trace());
  EXPECT_TRUE(d.cert.passed) << d.cert.failed_check;
}

TEST(Synthesize, Errors) {
  const HatSystem h = case_study_hat(2.5);
  EXPECT_THROW(synthesize(h, case_study_safe(), std::nullopt, case_study_scalars(), Objective::MinTraceAttack), Error);
  EXPECT_THROW(synthesize(h, case_study_safe(), std::nullopt, case_study_scalars(), Objective::MinTraceX), Error);
  EXPECT_THROW(synthesize(h, Ellipsoid(diag({0.022, 0.0})), case_study_Ra(), case_study_scalars(),
                          Objective::Feasibility),
               Error);
  EXPECT_THROW(synthesize(h, case_study_safe(), Matrix::Identity(3, 3), case_study_scalars(), Objective::Feasibility),
               Error);
}

TEST(Synthesize, ConditionRuleNudgesAndResolves) {
  SynthesisOptions o;
  o.condition_limit = 1.0 + 1e-12;  // forces the nudge
  const SynthesisResult r =
      synthesize(case_study_hat(2.5), case_study_safe(), case_study_Ra(), case_study_scalars(), Objective::Feasibility, o);
  ASSERT_TRUE(r.feasible) << r.message;
  EXPECT_TRUE(r.perturbed);
  const Recovery rec = recover_controller(*r.eta, case_study_hat(2.5));
  EXPECT_TRUE(certify(case_study_hat(2.5), rec.controller, r.Ra, case_study_safe(), r.alpha, r.beta, rec.data.P,
                      r.eta->X)
                  .passed);
}

TEST(Synthesize, GridSerialAndParallelAgree) {
  const ScalarGrid g = alpha_grid({0.125, 0.25, 0.5}, {0.9, 0.99});
  SynthesisOptions serial, parallel;
  serial.execution = Execution::Serial;
  parallel.execution = Execution::Parallel;
  const SynthesisResult a =
      synthesize_grid(case_study_hat(2.5), case_study_safe(), case_study_Ra(), g, Objective::MinTraceX, serial);
  const SynthesisResult b =
      synthesize_grid(case_study_hat(2.5), case_study_safe(), case_study_Ra(), g, Objective::MinTraceX, parallel);
  ASSERT_TRUE(a.feasible && b.feasible);
  EXPECT_EQ(a.eta->X, b.eta->X);
  EXPECT_EQ(a.alpha, b.alpha);
  EXPECT_EQ(a.delta, b.delta);
}

TEST(MinimizeInvariantVolume, CaseStudyShrinksInvariantSet) {
  const Design feas =
      design(case_study_hat(2.5), case_study_safe(), case_study_Ra(), case_study_scalars(), Objective::Feasibility);
  const Design min =
      design(case_study_hat(2.5), case_study_safe(), case_study_Ra(), case_study_scalars(), Objective::MinTraceX);
  ASSERT_TRUE(feas.result.feasible && min.result.feasible);
  EXPECT_TRUE(min.cert.passed) << min.cert.failed_check;
  EXPECT_LT(min.result.eta->X.determinant(), feas.result.eta->X.determinant());
  EXPECT_LE(min.result.eta->X.trace(), feas.result.eta->X.trace());
}

TEST(MinimizeInvariantVolume, ScalarWithoutSecuredActuatorHitsAnalyticBound) {
  // With no secured actuator the controller cannot change the dynamics, so
  // the smallest invariant interval is the analysis optimum 1 / (alpha (2 - alpha)).
  for (double a : {0.25, 1.0}) {
    const SynthesisResult r =
        minimize_invariant_volume(scalar_hat(0.0), Ellipsoid(scalar(0.25)), scalar(1.0), {a, std::nullopt, 0.99});
    ASSERT_TRUE(r.feasible) << r.message;
    EXPECT_NEAR(r.eta->X(0, 0), 1.0 / (a * (2 - a)), 1e-5) << "alpha " << a;
    const AnalysisResult an =
        verify_safety(scalar_loop(), scalar(1.0), Ellipsoid(scalar(0.25)), alpha_grid({a}, {0.99}));
    ASSERT_TRUE(an.certified());
    const Recovery rec = recover_controller(*r.eta, scalar_hat(0.0));
    const SynthesisCertificate c = certify(scalar_hat(0.0), rec.controller, scalar(1.0), Ellipsoid(scalar(0.25)),
                                           r.alpha, r.beta, rec.data.P, r.eta->X);
    ASSERT_TRUE(c.passed) << c.failed_check;
    EXPECT_NEAR(c.certificate.Q(0, 0), an.certificate->Q(0, 0), 1e-5);
  }
}

TEST(MinimizeInvariantVolume, SecuredActuatorBeatsAnalyticBound) {
  const SynthesisResult r =
      minimize_invariant_volume(scalar_hat(1.0), Ellipsoid(scalar(0.25)), scalar(1.0), {0.25, std::nullopt, 0.99});
  ASSERT_TRUE(r.feasible);
  EXPECT_LT(r.eta->X(0, 0), 1.0 / (0.25 * 1.75));
}

TEST(Certify, UnstableDecoupledControllerFailsInvariance) {
  SecondaryController sc = SecondaryController::zero(2, 1, 1);
  sc.A = Matrix::Identity(2, 2);
  const SynthesisCertificate c =
      certify(case_study_hat(2.5), sc, case_study_Ra(), case_study_safe(), 0.25, 0.1, Matrix::Identity(4, 4));
  EXPECT_FALSE(c.passed);
  EXPECT_NE(c.failed_check.find("invariance"), std::string::npos) << c.failed_check;
  EXPECT_LT(c.lmi_margin, -kCertificationTolerance);
}

TEST(Certify, IndefiniteLyapunovMatrixFailsFirstCheck) {
  const SynthesisCertificate c = certify(case_study_hat(2.5), SecondaryController::zero(2, 1, 1), case_study_Ra(),
                                         case_study_safe(), 0.25, 0.1, diag({1, 1, 1, -1}));
  EXPECT_FALSE(c.passed);
  EXPECT_NE(c.failed_check.find("positive"), std::string::npos) << c.failed_check;
}

TEST(Certify, WrongXFailsProjectionCheck) {
  const Design d =
      design(case_study_hat(2.5), case_study_safe(), case_study_Ra(), case_study_scalars(), Objective::Feasibility);
  ASSERT_TRUE(d.cert.passed);
  const SynthesisCertificate c = certify(case_study_hat(2.5), d.recovery.controller, d.result.Ra, case_study_safe(),
                                         d.result.alpha, d.result.beta, d.recovery.data.P, 2.0 * d.result.eta->X);
  EXPECT_FALSE(c.passed);
  EXPECT_NE(c.failed_check.find("projection"), std::string::npos) << c.failed_check;
}

TEST(SynthesisProperty, SignConventionsAgreeUnderCongruence) {
  // T^T (-(analysis form)) T = synthesis form with T = diag(Pi_1, 1, I).
  const HatSystem h = case_study_hat(2.5);
  const Design d = design(h, case_study_safe(), case_study_Ra(), case_study_scalars(), Objective::Feasibility);
  ASSERT_TRUE(d.cert.passed);
  const SynthesisVars& eta = *d.result.eta;
  const ClosedLoop cl = closed_loop_from_hat(h, d.recovery.controller);
  const Matrix an = analysis_form(cl, d.recovery.data.P, d.result.Ra, d.result.alpha, d.result.beta);
  const EtaExprs e = EtaExprs::of(eta);
  const Matrix syn = (build_E2bf(e, h) + d.result.alpha * build_Fbf(e, h.na()) +
                      d.result.beta * build_Sbf(AffineExpr(d.result.Ra), h.n1()))
                         .constant();
  Matrix T = Matrix::Identity(9, 9);
  T.topLeftCorner(4, 4) = pi1(eta.X, d.recovery.data.M);
  EXPECT_LT(rel(-T.transpose() * an * T, syn), 1e-8);
  // -analysis >= 0 and synthesis <= 0 hold together
  EXPECT_GE(min_eigenvalue(an), -kCertificationTolerance);
  EXPECT_LE(max_eigenvalue(syn), kFeasibilityTolerance * std::max(1.0, syn.norm()));
}

TEST(SynthesisProperty, RoundTripAndCongruenceOnRandomSystems) {
  std::mt19937_64 rng(21);
  int checked = 0;
  for (int i = 0; i < 16 && checked < 10; ++i) {
    const HatSystem h = random_hat(2 + i % 2, 2, rng);
    const ClosedLoop primary = loop_of(h.Ahat, h.B1);
    const AnalysisResult inv = find_invariant_unconstrained(primary, Matrix::Identity(2, 2), alpha_grid({0.25}));
    if (!inv.certified()) continue;
    const Ellipsoid safe(inv.certificate->Q / 4.0);
    const SynthesisResult r =
        synthesize(h, safe, Matrix::Identity(2, 2), {0.25, std::nullopt, 0.99}, Objective::Feasibility);
    if (!r.feasible) continue;
    ++checked;
    const SynthesisVars& eta = *r.eta;
    const Recovery rec = recover_controller(eta, h);
    const SynthesisVars fwd = forward_change_of_variables(rec.controller, h, eta.X, eta.Y, rec.data.M, rec.data.N);
    EXPECT_LT(rel(fwd.A, eta.A), 1e-8) << "system " << i;
    EXPECT_LT(rel(fwd.B, eta.B), 1e-8) << "system " << i;
    EXPECT_LT(rel(fwd.C, eta.C), 1e-8) << "system " << i;
    EXPECT_LT(rel(fwd.D, eta.D), 1e-8) << "system " << i;

    const ClosedLoop cl = closed_loop_from_hat(h, rec.controller);
    const Matrix P1 = pi1(eta.X, rec.data.M);
    const EtaExprs e = EtaExprs::of(eta);
    EXPECT_LT(rel(P1.transpose() * rec.data.P * cl.A() * P1, build_A_eta(e, h).constant()), 1e-8);
    EXPECT_LT(rel(P1.transpose() * rec.data.P * cl.B(), build_B_eta(e, h).constant()), 1e-8);
  }
  EXPECT_GE(checked, 5);
}

TEST(SynthesisProperty, CertificateIndependentOfM) {
  const HatSystem h = case_study_hat(2.5);
  const SynthesisResult r =
      synthesize(h, case_study_safe(), case_study_Ra(), case_study_scalars(), Objective::Feasibility);
  ASSERT_TRUE(r.feasible);
  Matrix M2(2, 2);
  M2 << 2.0, 0.5, -0.3, 1.5;
  std::vector<SynthesisCertificate> certs;
  for (const Matrix& M : {Matrix(Matrix::Identity(2, 2)), M2, Matrix(-3.0 * Matrix::Identity(2, 2))}) {
    const Recovery rec = recover_controller(*r.eta, h, M);
    certs.push_back(certify(h, rec.controller, r.Ra, case_study_safe(), r.alpha, r.beta, rec.data.P, r.eta->X));
  }
  for (const auto& c : certs) {
    EXPECT_EQ(c.passed, certs.front().passed);
    EXPECT_EQ(c.certificate.contained, certs.front().certificate.contained);
    EXPECT_LT(rel(c.certificate.Q, certs.front().certificate.Q), 1e-8);
  }
  EXPECT_TRUE(certs.front().passed);
}

TEST(SynthesisProperty, CertifiedLoopSurvivesSimulation) {
  const HatSystem h = case_study_hat(2.5);
  const Design d = design(h, case_study_safe(), case_study_Ra(), case_study_scalars(), Objective::MinTraceX);
  ASSERT_TRUE(d.cert.passed);
  const ClosedLoop cl = closed_loop_from_hat(h, d.recovery.controller);
  const Matrix& P = d.recovery.data.P;
  std::mt19937_64 rng(5);
  std::vector<BatchRun> runs;
  runs.push_back({sample_on_level(P, 1.0, rng), AttackPolicy::zero(d.result.Ra)});
  runs.push_back({sample_on_level(P, 1.0, rng), AttackPolicy::greedy(d.result.Ra, P)});
  runs.push_back({sample_on_level(P, 0.3, rng), AttackPolicy::greedy(d.result.Ra, P)});
  for (std::uint64_t s = 0; s < 5; ++s)
    runs.push_back({sample_on_level(P, 0.9, rng), AttackPolicy::random(d.result.Ra, 0.1, s)});
  for (const SafetyReport& r : check_batch(cl, runs, 1.0, default_step(cl), case_study_safe(), P)) {
    EXPECT_LE(r.max_invariant_level, 1.0 + kInvariantSlack);
    EXPECT_FALSE(r.first_violation.has_value());
    EXPECT_TRUE(r.attacks_admissible);
  }
}
