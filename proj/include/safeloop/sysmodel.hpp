#pragma once

#include "safeloop/types.hpp"

namespace safeloop {

/// x_p' = A x_p + B u,  y = C x_p
struct Plant {
  Matrix A, B, C;

  Index states() const { return A.rows(); }
  Index inputs() const { return B.cols(); }
  Index outputs() const { return C.rows(); }
  void validate() const;
};

/// Primary dynamic output feedback, reached through the attackable network.
struct PrimaryController {
  Matrix A, B, C, D;

  Index states() const { return A.rows(); }
  void validate(const Plant& p) const;
};

/// Secondary controller on secured channels: input y_S = C_S y, output u_S.
struct SecondaryController {
  Matrix A, B, C, D;

  static SecondaryController zero(Index states, Index inputs, Index outputs);
  Index states() const { return A.rows(); }
  Index inputs() const { return B.cols(); }
  Index outputs() const { return C.rows(); }
  void validate() const;
};

/// u = u_P + a_u + E_u u_S and y_S = C_S y.
struct Selection {
  Matrix Eu;  // n_u x m_u
  Matrix Cs;  // m_y x n_y

  static Selection none(Index n_u, Index n_y);
  void validate(const Plant& p) const;
};

/// zeta' = A zeta + B a with zeta = [x_p; x_1; x_2] and a = [a_u; a_y].
class ClosedLoop {
 public:
  ClosedLoop(const Matrix& A1, const Matrix& A2, const Matrix& A3, const Matrix& A4, const Matrix& B1);

  const Matrix& A() const { return A_; }
  const Matrix& B() const { return B_; }
  Index n1() const { return n1_; }
  Index n2() const { return n2_; }
  Index na() const { return B_.cols(); }
  Index dim() const { return n1_ + n2_; }

  Matrix A1() const { return A_.topLeftCorner(n1_, n1_); }
  Matrix A2() const { return A_.topRightCorner(n1_, n2_); }
  Matrix A3() const { return A_.bottomLeftCorner(n2_, n1_); }
  Matrix A4() const { return A_.bottomRightCorner(n2_, n2_); }
  Matrix B1() const { return B_.topRows(n1_); }
  Matrix B2() const { return B_.bottomRows(n2_); }

  /// The leading n1 block only, as a loop without secondary states.
  ClosedLoop primary_part() const;
  /// True when A2 and A3 vanish, i.e. the secondary controller is decoupled.
  bool secondary_decoupled() const;

 private:
  Matrix A_, B_;
  Index n1_, n2_;
};

/// Plant plus primary controller seen from the secured channels.
struct HatSystem {
  Matrix Ahat;  // n1 x n1
  Matrix Bhat;  // n1 x m_u
  Matrix Chat;  // m_y x n1
  Matrix B1;    // n1 x n_a

  Index n1() const { return Ahat.rows(); }
  Index mu() const { return Bhat.cols(); }
  Index my() const { return Chat.rows(); }
  Index na() const { return B1.cols(); }
  void validate() const;
};

ClosedLoop assemble_closed_loop(const Plant& p, const PrimaryController& pc, const SecondaryController& sc,
                                const Selection& sel);

/// Closed loop with the secondary controller removed (E_u = 0, C_S = 0, n2 = 0).
ClosedLoop assemble_primary_loop(const Plant& p, const PrimaryController& pc);

HatSystem hat_matrices(const Plant& p, const PrimaryController& pc, const Selection& sel);

ClosedLoop closed_loop_from_hat(const HatSystem& h, const SecondaryController& sc);

}  // namespace safeloop
