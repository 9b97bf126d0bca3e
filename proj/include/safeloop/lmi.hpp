#pragma once

#include "safeloop/affine.hpp"
#include "safeloop/ellipsoid.hpp"
#include "safeloop/sdp.hpp"
#include "safeloop/sysmodel.hpp"

#include <utility>

namespace safeloop {

// Every block LMI below acts on the stacked vector [state; 1; a], so the
// quadratic forms compose through the S-procedure.

/// [[A^T Q + Q A, 0, Q B], [*, 0, 0], [*, *, 0]]
AffineExpr build_E1(const Matrix& A, const Matrix& B, const AffineExpr& Q);

/// [[Q, 0, 0], [*, -1, 0], [*, *, 0_{na}]]
AffineExpr build_F(const AffineExpr& Q, Index na);

/// [[0_{n}, 0, 0], [*, 1, 0], [*, *, -Ra]]
AffineExpr build_S(const AffineExpr& Ra, Index n);

/// Decision variables of the convexified synthesis problem.
struct EtaVars {
  Variable X, Y, A, B, C, D;
};

/// Registers X, Y (symmetric n1), A (n1 x n1), B (n1 x m_y), C (m_u x n1)
/// and D (m_u x m_y) with the problem.
EtaVars declare_eta(SdpProblem& problem, const HatSystem& hat);

/// Values of the synthesis variables (the same fields as EtaVars).
struct SynthesisVars {
  Matrix X, Y, A, B, C, D;

  static SynthesisVars from(const SdpSolution& s);
};

struct EtaExprs {
  AffineExpr X, Y, A, B, C, D;

  static EtaExprs of(const EtaVars& v);
  static EtaExprs of(const SynthesisVars& v);
};

AffineExpr build_A_eta(const EtaExprs& eta, const HatSystem& hat);
AffineExpr build_B_eta(const EtaExprs& eta, const HatSystem& hat);
/// [[X, I], [I, Y]]
AffineExpr build_P_eta(const EtaExprs& eta);

/// [[A(eta)^T + A(eta), 0, B(eta)], [*, 0, 0], [*, *, 0]]
AffineExpr build_E2bf(const EtaExprs& eta, const HatSystem& hat);
AffineExpr build_Fbf(const EtaExprs& eta, Index na);
AffineExpr build_Sbf(const AffineExpr& Ra, Index n1);

/// (J, L) such that J - delta L <= 0 encodes {z : z^T X^{-1} z <= 1} inside
/// the safe ellipsoid. The safe shape must be invertible.
std::pair<AffineExpr, AffineExpr> build_containment_JL(const AffineExpr& X, const Ellipsoid& safe);

}  // namespace safeloop
