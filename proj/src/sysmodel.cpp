#include "safeloop/sysmodel.hpp"

namespace safeloop {
namespace {

void need(bool ok, const std::string& what) {
  if (!ok) throw Error(ErrorKind::DimensionMismatch, what);
}

std::string dims(const char* name, const Matrix& m) { return std::string(name) + " is " + shape_string(m); }

void require_selection_entries(const Matrix& m, const char* name, bool per_row) {
  for (Index i = 0; i < m.rows(); ++i)
    for (Index j = 0; j < m.cols(); ++j)
      if (m(i, j) != 0.0 && m(i, j) != 1.0)
        throw Error(ErrorKind::InvalidArgument, std::string(name) + " entries must be 0 or 1");
  const Index lines = per_row ? m.rows() : m.cols();
  for (Index k = 0; k < lines; ++k) {
    const double ones = per_row ? m.row(k).sum() : m.col(k).sum();
    if (ones > 1.0)
      throw Error(ErrorKind::InvalidArgument, std::string(name) + " selects more than one channel in " +
                                                  (per_row ? "row " : "column ") + std::to_string(k));
  }
}

}  // namespace

void Plant::validate() const {
  need(A.rows() >= 1 && A.rows() == A.cols(), "plant: A_p must be square and nonempty, " + dims("A_p", A));
  need(B.rows() == A.rows() && B.cols() >= 1, "plant: " + dims("B_p", B) + ", " + dims("A_p", A));
  need(C.cols() == A.rows() && C.rows() >= 1, "plant: " + dims("C_p", C) + ", " + dims("A_p", A));
}

void PrimaryController::validate(const Plant& p) const {
  need(A.rows() == A.cols(), "primary controller: A_1 must be square, " + dims("A_1", A));
  need(B.rows() == A.rows() && B.cols() == p.outputs(),
       "primary controller: " + dims("B_1", B) + ", " + dims("A_1", A) + ", " + dims("C_p", p.C));
  need(C.cols() == A.rows() && C.rows() == p.inputs(),
       "primary controller: " + dims("C_1", C) + ", " + dims("A_1", A) + ", " + dims("B_p", p.B));
  need(D.rows() == p.inputs() && D.cols() == p.outputs(),
       "primary controller: " + dims("D_1", D) + ", " + dims("B_p", p.B) + ", " + dims("C_p", p.C));
}

SecondaryController SecondaryController::zero(Index states, Index inputs, Index outputs) {
  return {Matrix::Zero(states, states), Matrix::Zero(states, inputs), Matrix::Zero(outputs, states),
          Matrix::Zero(outputs, inputs)};
}

void SecondaryController::validate() const {
  need(A.rows() == A.cols(), "secondary controller: A_2 must be square, " + dims("A_2", A));
  need(B.rows() == A.rows(), "secondary controller: " + dims("B_2", B) + ", " + dims("A_2", A));
  need(C.cols() == A.rows(), "secondary controller: " + dims("C_2", C) + ", " + dims("A_2", A));
  need(D.rows() == C.rows() && D.cols() == B.cols(),
       "secondary controller: " + dims("D_2", D) + ", " + dims("B_2", B) + ", " + dims("C_2", C));
}

Selection Selection::none(Index n_u, Index n_y) { return {Matrix::Zero(n_u, 0), Matrix::Zero(0, n_y)}; }

void Selection::validate(const Plant& p) const {
  need(Eu.rows() == p.inputs(), "selection: " + dims("E_u", Eu) + ", " + dims("B_p", p.B));
  need(Cs.cols() == p.outputs(), "selection: " + dims("C_S", Cs) + ", " + dims("C_p", p.C));
  require_selection_entries(Eu, "E_u", false);
  require_selection_entries(Cs, "C_S", true);
}

void HatSystem::validate() const {
  need(Ahat.rows() >= 1 && Ahat.rows() == Ahat.cols(), "hat system: " + dims("Ahat", Ahat) + " must be square");
  need(Bhat.rows() == n1(), "hat system: " + dims("Bhat", Bhat) + ", " + dims("Ahat", Ahat));
  need(Chat.cols() == n1(), "hat system: " + dims("Chat", Chat) + ", " + dims("Ahat", Ahat));
  need(B1.rows() == n1() && B1.cols() >= 1, "hat system: " + dims("B1cal", B1) + ", " + dims("Ahat", Ahat));
}

ClosedLoop::ClosedLoop(const Matrix& A1, const Matrix& A2, const Matrix& A3, const Matrix& A4, const Matrix& B1)
    : n1_(A1.rows()), n2_(A4.rows()) {
  need(A1.rows() == A1.cols(), "closed loop: " + dims("A1cal", A1) + " must be square");
  need(A4.rows() == A4.cols(), "closed loop: " + dims("A4cal", A4) + " must be square");
  need(A2.rows() == n1_ && A2.cols() == n2_, "closed loop: " + dims("A2cal", A2) + ", expected " +
                                                 std::to_string(n1_) + "x" + std::to_string(n2_));
  need(A3.rows() == n2_ && A3.cols() == n1_, "closed loop: " + dims("A3cal", A3) + ", expected " +
                                                 std::to_string(n2_) + "x" + std::to_string(n1_));
  need(B1.rows() == n1_, "closed loop: " + dims("B1cal", B1) + ", " + dims("A1cal", A1));
  A_.resize(n1_ + n2_, n1_ + n2_);
  A_ << A1, A2, A3, A4;
  B_ = Matrix::Zero(n1_ + n2_, B1.cols());
  B_.topRows(n1_) = B1;
}

ClosedLoop ClosedLoop::primary_part() const {
  return ClosedLoop(A1(), Matrix::Zero(n1_, 0), Matrix::Zero(0, n1_), Matrix::Zero(0, 0), B1());
}

bool ClosedLoop::secondary_decoupled() const {
  return (n2_ == 0) || (A2().isZero(0.0) && A3().isZero(0.0));
}

HatSystem hat_matrices(const Plant& p, const PrimaryController& pc, const Selection& sel) {
  p.validate();
  pc.validate(p);
  sel.validate(p);
  const Index np = p.states(), nc = pc.states(), n1 = np + nc;
  HatSystem h;
  h.Ahat.resize(n1, n1);
  h.Ahat << p.A + p.B * pc.D * p.C, p.B * pc.C, pc.B * p.C, pc.A;
  h.Bhat = Matrix::Zero(n1, sel.Eu.cols());
  h.Bhat.topRows(np) = p.B * sel.Eu;
  h.Chat = Matrix::Zero(sel.Cs.rows(), n1);
  h.Chat.leftCols(np) = sel.Cs * p.C;
  h.B1 = Matrix::Zero(n1, p.inputs() + p.outputs());
  h.B1.topLeftCorner(np, p.inputs()) = p.B;
  h.B1.topRightCorner(np, p.outputs()) = p.B * pc.D;
  h.B1.bottomRightCorner(nc, p.outputs()) = pc.B;
  return h;
}

ClosedLoop closed_loop_from_hat(const HatSystem& h, const SecondaryController& sc) {
  h.validate();
  sc.validate();
  need(sc.inputs() == h.my(), "secondary controller: " + dims("B_2", sc.B) + " does not match " + dims("Chat", h.Chat));
  need(sc.outputs() == h.mu(), "secondary controller: " + dims("C_2", sc.C) + " does not match " + dims("Bhat", h.Bhat));
  return ClosedLoop(h.Ahat + h.Bhat * sc.D * h.Chat, h.Bhat * sc.C, sc.B * h.Chat, sc.A, h.B1);
}

ClosedLoop assemble_closed_loop(const Plant& p, const PrimaryController& pc, const SecondaryController& sc,
                                const Selection& sel) {
  p.validate();
  pc.validate(p);
  sel.validate(p);
  sc.validate();
  need(sc.inputs() == sel.Cs.rows(), "secondary controller: " + dims("B_2", sc.B) + ", " + dims("C_S", sel.Cs));
  need(sc.outputs() == sel.Eu.cols(), "secondary controller: " + dims("C_2", sc.C) + ", " + dims("E_u", sel.Eu));
  const Index np = p.states(), nc = pc.states(), n1 = np + nc, n2 = sc.states();
  const Matrix BE = p.B * sel.Eu;

  Matrix A1(n1, n1);
  A1 << p.A + p.B * pc.D * p.C + BE * sc.D * sel.Cs * p.C, p.B * pc.C, pc.B * p.C, pc.A;
  Matrix A2 = Matrix::Zero(n1, n2);
  A2.topRows(np) = BE * sc.C;
  Matrix A3 = Matrix::Zero(n2, n1);
  A3.leftCols(np) = sc.B * sel.Cs * p.C;
  Matrix B1 = Matrix::Zero(n1, p.inputs() + p.outputs());
  B1.topLeftCorner(np, p.inputs()) = p.B;
  B1.topRightCorner(np, p.outputs()) = p.B * pc.D;
  B1.bottomRightCorner(nc, p.outputs()) = pc.B;
  return ClosedLoop(A1, A2, A3, sc.A, B1);
}

ClosedLoop assemble_primary_loop(const Plant& p, const PrimaryController& pc) {
  const SecondaryController none = SecondaryController::zero(0, 0, 0);
  return assemble_closed_loop(p, pc, none, Selection::none(p.inputs(), p.outputs()));
}

}  // namespace safeloop
