#include "support.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace safeloop;
using namespace safeloop::test;

namespace {

struct RandomSystem {
  Plant p;
  PrimaryController pc;
  SecondaryController sc;
  Selection sel;
};

// Consistent random dimensions; secured channels pick distinct columns/rows.
RandomSystem random_system(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> d(1, 3);
  const Index np = d(rng), nc = d(rng), nu = d(rng), ny = d(rng);
  const Index mu = std::uniform_int_distribution<Index>(1, nu)(rng);
  const Index my = std::uniform_int_distribution<Index>(1, ny)(rng);
  RandomSystem s;
  s.p = {random_matrix(np, np, rng), random_matrix(np, nu, rng), random_matrix(ny, np, rng)};
  s.pc = {random_matrix(nc, nc, rng), random_matrix(nc, ny, rng), random_matrix(nu, nc, rng),
          random_matrix(nu, ny, rng)};
  const Index n1 = np + nc;
  s.sc = {random_matrix(n1, n1, rng), random_matrix(n1, my, rng), random_matrix(mu, n1, rng),
          random_matrix(mu, my, rng)};
  s.sel.Eu = Matrix::Zero(nu, mu);
  for (Index j = 0; j < mu; ++j) s.sel.Eu(j, j) = 1.0;
  s.sel.Cs = Matrix::Zero(my, ny);
  for (Index i = 0; i < my; ++i) s.sel.Cs(i, ny - 1 - i) = 1.0;
  return s;
}

// E_u = 0 and C_S = 0, sized for the given controller.
Selection zero_selection(const Plant& p, const SecondaryController& sc) {
  return {Matrix::Zero(p.inputs(), sc.outputs()), Matrix::Zero(sc.inputs(), p.outputs())};
}

Plant scalar_plant() { return {scalar(-1), scalar(1), scalar(1)}; }
PrimaryController scalar_primary() { return {scalar(-1), scalar(0), scalar(0), scalar(0)}; }

}  // namespace

TEST(AssembleClosedLoop, ZeroSelectionRemovesCoupling) {
  std::mt19937_64 rng(1);
  RandomSystem s = random_system(rng);
  s.pc.D.setZero();
  const ClosedLoop cl = assemble_closed_loop(s.p, s.pc, s.sc, zero_selection(s.p, s.sc));
  const Index np = s.p.states();
  Matrix A1(cl.n1(), cl.n1());
  A1 << s.p.A, s.p.B * s.pc.C, s.pc.B * s.p.C, s.pc.A;
  EXPECT_TRUE(cl.A1().isApprox(A1, 1e-14));
  EXPECT_TRUE(cl.A2().isZero(0.0));
  EXPECT_TRUE(cl.A3().isZero(0.0));
  EXPECT_TRUE(cl.secondary_decoupled());
  EXPECT_EQ(cl.A1().rows(), np + s.pc.states());
}

TEST(AssembleClosedLoop, ScalarChain) {
  const SecondaryController sc = SecondaryController::zero(2, 1, 1);
  const ClosedLoop cl = assemble_closed_loop(scalar_plant(), scalar_primary(), sc, zero_selection(scalar_plant(), sc));
  EXPECT_TRUE(cl.A1().isApprox(diag({-1, -1})));
  Matrix B1(2, 2);
  B1 << 1, 0, 0, 0;
  EXPECT_TRUE(cl.B1().isApprox(B1));
  EXPECT_TRUE(cl.B2().isZero(0.0));
}

TEST(AssembleClosedLoop, Dimensions) {
  std::mt19937_64 rng(2);
  const Plant p{random_matrix(2, 2, rng), random_matrix(2, 2, rng), random_matrix(2, 2, rng)};
  const PrimaryController pc{random_matrix(2, 2, rng), random_matrix(2, 2, rng), random_matrix(2, 2, rng),
                             random_matrix(2, 2, rng)};
  const SecondaryController sc{random_matrix(2, 2, rng), random_matrix(2, 2, rng), random_matrix(2, 2, rng),
                               random_matrix(2, 2, rng)};
  const Selection sel{Matrix::Identity(2, 2), Matrix::Identity(2, 2)};
  const ClosedLoop cl = assemble_closed_loop(p, pc, sc, sel);
  EXPECT_EQ(cl.A().rows(), 6);
  EXPECT_EQ(cl.A().cols(), 6);
  EXPECT_EQ(cl.B().rows(), 6);
  EXPECT_EQ(cl.B().cols(), 4);
}

TEST(AssembleClosedLoop, DimensionErrorNamesOperands) {
  Plant p = scalar_plant();
  p.B = Matrix::Zero(2, 1);
  try {
    assemble_closed_loop(p, scalar_primary(), SecondaryController::zero(2, 1, 1), {scalar(0), scalar(0)});
    FAIL() << "expected a dimension error";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::DimensionMismatch);
    const std::string what = e.what();
    EXPECT_NE(what.find("B_p"), std::string::npos) << what;
    EXPECT_NE(what.find("A_p"), std::string::npos) << what;
  }
}

TEST(Selection, RejectsRepeatedChannel) {
  Selection sel{Matrix::Ones(2, 1), Matrix::Zero(0, 2)};
  const Plant p{Matrix::Identity(1, 1), Matrix::Ones(1, 2), Matrix::Ones(2, 1)};
  EXPECT_THROW(sel.validate(p), Error);
}

TEST(HatMatrices, SingleSecuredChannel) {
  std::mt19937_64 rng(3);
  const Plant p{random_matrix(2, 2, rng), random_matrix(2, 2, rng), random_matrix(2, 2, rng)};
  const PrimaryController pc{random_matrix(1, 1, rng), random_matrix(1, 2, rng), random_matrix(2, 1, rng),
                             random_matrix(2, 2, rng)};
  Selection sel{Matrix::Zero(2, 1), Matrix::Zero(1, 2)};
  sel.Eu(0, 0) = 1.0;
  sel.Cs(0, 0) = 1.0;
  const HatSystem h = hat_matrices(p, pc, sel);
  EXPECT_EQ(h.Bhat.cols(), 1);
  EXPECT_EQ(h.Chat.rows(), 1);
  EXPECT_EQ(h.na(), 4);
}

TEST(HatMatrices, NoSelectionGivesZeroChannels) {
  std::mt19937_64 rng(4);
  const RandomSystem s = random_system(rng);
  Selection zero{Matrix::Zero(s.p.inputs(), 1), Matrix::Zero(1, s.p.outputs())};
  const HatSystem h = hat_matrices(s.p, s.pc, zero);
  EXPECT_TRUE(h.Bhat.isZero(0.0));
  EXPECT_TRUE(h.Chat.isZero(0.0));
}

TEST(HatMatrices, CaseStudyReducedModel) {
  const HatSystem h = hat_matrices(scalar_plant(), scalar_primary(), {scalar(1), scalar(1)});
  EXPECT_TRUE(h.Ahat.isApprox(-Matrix::Identity(2, 2)));
  EXPECT_TRUE(h.Bhat.isApprox(case_study_hat(1).Bhat));
  EXPECT_TRUE(h.Chat.isApprox(case_study_hat(1).Chat));
}

TEST(ClosedLoopFromHat, ZeroController) {
  const HatSystem h = case_study_hat(1.0);
  const ClosedLoop cl = closed_loop_from_hat(h, SecondaryController::zero(2, 1, 1));
  EXPECT_TRUE(cl.A1().isApprox(h.Ahat));
  EXPECT_TRUE(cl.A2().isZero(0.0));
  EXPECT_TRUE(cl.A3().isZero(0.0));
  EXPECT_TRUE(cl.B1().isApprox(h.B1));
  EXPECT_TRUE(cl.B2().isZero(0.0));
}

TEST(ClosedLoopFromHat, CaseStudyRecoveredController) {
  const HatSystem h = case_study_hat(1.0);
  const Recovery r = recover_controller(published_eta(), h);
  const ClosedLoop cl = closed_loop_from_hat(h, r.controller);
  EXPECT_NEAR(cl.A1()(0, 0), -27.8308, 1e-4);
  EXPECT_NEAR(cl.A1()(1, 1), -1.0, 1e-14);
  EXPECT_NEAR(cl.A1()(0, 1), 0.0, 1e-14);
  EXPECT_NEAR(cl.A1()(1, 0), 0.0, 1e-14);
}

TEST(ClosedLoopFromHat, BlocksRetileExactly) {
  std::mt19937_64 rng(5);
  for (int i = 0; i < 20; ++i) {
    const HatSystem h = random_hat(2 + i % 3, 3, rng);
    const Index n = h.n1();
    const SecondaryController sc{random_matrix(n, n, rng), random_matrix(n, 1, rng), random_matrix(1, n, rng),
                                 random_matrix(1, 1, rng)};
    const ClosedLoop cl = closed_loop_from_hat(h, sc);
    Matrix A(2 * n, 2 * n);
    A << cl.A1(), cl.A2(), cl.A3(), cl.A4();
    EXPECT_EQ(A, cl.A());
    EXPECT_EQ(cl.A1(), h.Ahat + h.Bhat * sc.D * h.Chat);
    EXPECT_EQ(cl.A2(), h.Bhat * sc.C);
    EXPECT_EQ(cl.A3(), sc.B * h.Chat);
    EXPECT_EQ(cl.A4(), sc.A);
  }
}

TEST(ClosedLoopFromHat, RejectsMismatchedController) {
  EXPECT_THROW(closed_loop_from_hat(case_study_hat(1.0), SecondaryController::zero(2, 2, 1)), Error);
}

TEST(SysmodelProperty, HatFormMatchesDirectAssembly) {
  std::mt19937_64 rng(6);
  for (int i = 0; i < 100; ++i) {
    const RandomSystem s = random_system(rng);
    const ClosedLoop direct = assemble_closed_loop(s.p, s.pc, s.sc, s.sel);
    const ClosedLoop via_hat = closed_loop_from_hat(hat_matrices(s.p, s.pc, s.sel), s.sc);
    ASSERT_EQ(direct.A().rows(), via_hat.A().rows());
    EXPECT_LE((direct.A() - via_hat.A()).cwiseAbs().maxCoeff(), 1e-12) << "case " << i;
    EXPECT_LE((direct.B() - via_hat.B()).cwiseAbs().maxCoeff(), 1e-12) << "case " << i;
  }
}

TEST(SysmodelProperty, PrimaryOnlyAgreesWithZeroSelection) {
  std::mt19937_64 rng(7);
  for (int i = 0; i < 50; ++i) {
    const RandomSystem s = random_system(rng);
    const Selection none = zero_selection(s.p, s.sc);
    const ClosedLoop full = assemble_closed_loop(s.p, s.pc, s.sc, none);
    const HatSystem h = hat_matrices(s.p, s.pc, none);
    const ClosedLoop from_hat =
        closed_loop_from_hat(h, SecondaryController::zero(h.n1(), h.my(), h.mu()));
    EXPECT_TRUE(full.A1().isApprox(from_hat.A1(), 1e-14));
    EXPECT_TRUE(full.B1().isApprox(from_hat.B1(), 1e-14));
    EXPECT_TRUE(assemble_primary_loop(s.p, s.pc).A().isApprox(full.A1(), 1e-14));
  }
}

TEST(SysmodelProperty, AssemblyIsDeterministic) {
  std::mt19937_64 rng(8);
  const RandomSystem s = random_system(rng);
  const ClosedLoop a = assemble_closed_loop(s.p, s.pc, s.sc, s.sel);
  const ClosedLoop b = assemble_closed_loop(s.p, s.pc, s.sc, s.sel);
  EXPECT_EQ(a.A(), b.A());
  EXPECT_EQ(a.B(), b.B());
}
