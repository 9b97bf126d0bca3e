#include "safeloop/sdp.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <optional>

namespace safeloop {
namespace {

// Constraint block F(z) = f0 + sum_i z_idx[i] * coef[i], normalized so its
// data has unit Frobenius scale. Normalization does not move the central
// path (it only shifts the barrier by a constant).
struct Block {
  Matrix f0;
  std::vector<int> idx;
  std::vector<Matrix> coef;
};

enum class CenterResult { Converged, Stalled, OutOfBudget };

class BarrierFunction {
 public:
  // With `shifted`, coordinate n is the phase-I slack s and every block
  // becomes F(x) + s I. The ball constraint covers the first n coordinates.
  BarrierFunction(const std::vector<Block>& blocks, int n, double radius, bool shifted)
      : blocks_(blocks), n_(n), radius2_(radius * radius), shifted_(shifted) {}

  int dim() const { return shifted_ ? n_ + 1 : n_; }

  int barrier_order() const {
    int m = 1;
    for (const auto& b : blocks_) m += static_cast<int>(b.f0.rows());
    return m;
  }

  Matrix block_value(const Block& b, const Vector& z) const {
    Matrix f = b.f0;
    for (std::size_t i = 0; i < b.idx.size(); ++i) f += z(b.idx[i]) * b.coef[i];
    if (shifted_) f.diagonal().array() += z(n_);
    return f;
  }

  // Returns false when z is outside the barrier's domain.
  bool value(const Vector& z, double t, const Vector& c, double& f) const {
    const double r2 = radius2_ - z.head(n_).squaredNorm();
    if (!(r2 > 0.0)) return false;
    f = t * c.dot(z) - std::log(r2);
    for (const auto& b : blocks_) {
      Eigen::LLT<Matrix> llt(block_value(b, z));
      if (llt.info() != Eigen::Success) return false;
      const Matrix l = llt.matrixL();
      for (Index k = 0; k < l.rows(); ++k) {
        if (!(l(k, k) > 0.0)) return false;
        f -= 2.0 * std::log(l(k, k));
      }
    }
    return std::isfinite(f);
  }

  bool derivatives(const Vector& z, double t, const Vector& c, double& f, Vector& g, Matrix& H) const {
    const int dimz = dim();
    g = t * c;
    H = Matrix::Zero(dimz, dimz);
    const Vector x = z.head(n_);
    const double r2 = radius2_ - x.squaredNorm();
    if (!(r2 > 0.0)) return false;
    f = t * c.dot(z) - std::log(r2);
    g.head(n_) += (2.0 / r2) * x;
    H.topLeftCorner(n_, n_) += (2.0 / r2) * Matrix::Identity(n_, n_) + (4.0 / (r2 * r2)) * x * x.transpose();

    std::vector<Matrix> w;
    std::vector<int> wi;
    for (const auto& b : blocks_) {
      const Index m = b.f0.rows();
      Eigen::LLT<Matrix> llt(block_value(b, z));
      if (llt.info() != Eigen::Success) return false;
      const Matrix l = llt.matrixL();
      for (Index k = 0; k < m; ++k) {
        if (!(l(k, k) > 0.0)) return false;
        f -= 2.0 * std::log(l(k, k));
      }
      const Matrix linv = l.triangularView<Eigen::Lower>().solve(Matrix::Identity(m, m));
      w.clear();
      wi.clear();
      for (std::size_t i = 0; i < b.idx.size(); ++i) {
        w.push_back(linv * b.coef[i] * linv.transpose());
        wi.push_back(b.idx[i]);
      }
      if (shifted_) {
        w.push_back(linv * linv.transpose());
        wi.push_back(n_);
      }
      for (std::size_t i = 0; i < w.size(); ++i) {
        g(wi[i]) -= w[i].trace();
        for (std::size_t k = 0; k <= i; ++k) {
          const double h = w[i].cwiseProduct(w[k]).sum();
          H(wi[i], wi[k]) += h;
          if (k != i) H(wi[k], wi[i]) += h;
        }
      }
    }
    return std::isfinite(f);
  }

 private:
  const std::vector<Block>& blocks_;
  int n_;
  double radius2_;
  bool shifted_;
};

// Solves H d = -g with Jacobi equilibration; adds a ridge if H is
// numerically singular.
Vector newton_direction(const Matrix& H, const Vector& g) {
  const Index n = H.rows();
  Vector d = H.diagonal().cwiseMax(1e-300).cwiseSqrt().cwiseInverse();
  Matrix hs = d.asDiagonal() * H * d.asDiagonal();
  const Vector gs = d.cwiseProduct(g);
  for (double ridge = 0.0; ridge < 1.0; ridge = (ridge == 0.0 ? 1e-14 : ridge * 100.0)) {
    Eigen::LLT<Matrix> llt(hs + ridge * Matrix::Identity(n, n));
    if (llt.info() == Eigen::Success) {
      Vector step = -llt.solve(gs);
      if (step.allFinite()) return d.cwiseProduct(step);
    }
  }
  return d.cwiseProduct(-gs);
}

// With `stop_below` set, returns as soon as the last coordinate (the phase-I
// slack) drops below it.
CenterResult center(const BarrierFunction& bf, Vector& z, double t, const Vector& c, int& budget,
                    std::optional<double> stop_below = std::nullopt) {
  Vector g;
  Matrix H;
  double f = 0.0;
  while (true) {
    if (stop_below && z(z.size() - 1) < *stop_below) return CenterResult::Converged;
    if (budget <= 0) return CenterResult::OutOfBudget;
    --budget;
    if (!bf.derivatives(z, t, c, f, g, H)) return CenterResult::Stalled;
    const Vector dz = newton_direction(H, g);
    const double slope = g.dot(dz);
    const double lambda2 = -slope;
    if (lambda2 <= 2e-10) return CenterResult::Converged;
    if (!(slope < 0.0)) return CenterResult::Stalled;
    // Damped step: stay inside the domain, then backtrack (Armijo).
    double h = lambda2 > 0.25 ? 1.0 / (1.0 + std::sqrt(lambda2)) : 1.0;
    double fnew = 0.0;
    int tries = 0;
    while (!bf.value(z + h * dz, t, c, fnew) && tries < 80) {
      h *= 0.5;
      ++tries;
    }
    while (fnew > f + 0.25 * h * slope + 1e-13 * std::abs(f) && tries < 80) {
      h *= 0.5;
      ++tries;
      if (!bf.value(z + h * dz, t, c, fnew)) fnew = std::numeric_limits<double>::infinity();
    }
    if (tries >= 80) return lambda2 < 1e-6 ? CenterResult::Converged : CenterResult::Stalled;
    z += h * dz;
  }
}

// Rows that are identically zero in the constant and every coefficient
// carry no information (a PSD matrix with a zero diagonal entry has a zero
// row), but they would leave the block without interior.
std::vector<Index> live_rows(const AffineExpr& e) {
  std::vector<Index> keep;
  for (Index i = 0; i < e.rows(); ++i) {
    bool zero = e.constant().row(i).isZero(0.0);
    for (const auto& [k, coef] : e.terms()) zero = zero && coef.row(i).isZero(0.0) && coef.col(i).isZero(0.0);
    zero = zero && e.constant().col(i).isZero(0.0);
    if (!zero) keep.push_back(i);
  }
  return keep;
}

Matrix restrict(const Matrix& m, const std::vector<Index>& keep) {
  const Index k = static_cast<Index>(keep.size());
  Matrix out(k, k);
  for (Index r = 0; r < k; ++r)
    for (Index c = 0; c < k; ++c) out(r, c) = m(keep[static_cast<std::size_t>(r)], keep[static_cast<std::size_t>(c)]);
  return out;
}

std::vector<Block> compile(const SdpProblem& problem) {
  std::vector<Block> blocks;
  for (const auto& con : problem.constraints()) {
    const std::vector<Index> keep = live_rows(con.expr);
    if (keep.empty()) continue;
    Block b;
    b.f0 = restrict(symmetrized(con.expr.constant()), keep);
    double scale = b.f0.norm();
    for (const auto& [k, coef] : con.expr.terms()) {
      Matrix s = restrict(symmetrized(coef), keep);
      const double nrm = s.norm();
      if (nrm == 0.0) continue;
      scale = std::max(scale, nrm);
      b.idx.push_back(k);
      b.coef.push_back(std::move(s));
    }
    if (scale == 0.0) scale = 1.0;
    b.f0 /= scale;
    for (auto& m : b.coef) m /= scale;
    blocks.push_back(std::move(b));
  }
  return blocks;
}

}  // namespace

SdpSolution BarrierBackend::solve(const SdpProblem& problem) const {
  const int n = problem.num_scalars();
  const std::vector<Block> blocks = compile(problem);
  int budget = options_.max_newton_steps;
  SdpSolution out;

  // Phase I: minimize s subject to F_j(x) + s I >= 0 and |x| <= radius.
  BarrierFunction phase1(blocks, n, options_.radius, true);
  Vector z = Vector::Zero(n + 1);
  double worst = 0.0;
  for (const auto& b : blocks) worst = std::min(worst, b.f0.size() ? min_eigenvalue(b.f0) : 0.0);
  z(n) = 1.0 - worst;
  Vector e_s = Vector::Zero(n + 1);
  e_s(n) = 1.0;
  const double m1 = phase1.barrier_order();
  bool strictly_feasible = false;
  bool boundary_feasible = false;
  for (double t = 1.0;; t *= 10.0) {
    const auto r = center(phase1, z, t, e_s, budget, -options_.interior_margin);
    const double s = z(n);
    if (s < -options_.interior_margin) {
      strictly_feasible = true;
      break;
    }
    if (s - m1 / t > options_.infeasibility_margin) break;
    if (m1 / t < 1e-13 || r != CenterResult::Converged) {
      boundary_feasible = s <= options_.infeasibility_margin;
      break;
    }
  }
  Vector x = z.head(n);

  if (!strictly_feasible) {
    fill_constraint_report(problem, x, out);
    out.newton_steps = options_.max_newton_steps - budget;
    if (boundary_feasible && out.min_eigenvalue >= -kFeasibilityTolerance) {
      // No interior: the set is (numerically) a boundary point.
      out.status = problem.objective() ? SdpStatus::Inaccurate : SdpStatus::Feasible;
      out.message = "feasible set has empty interior";
    } else {
      out.status = SdpStatus::Infeasible;
      char buf[96];
      std::snprintf(buf, sizeof buf, "phase I: best normalized constraint margin %.3e < 0", -z(n));
      out.message = buf;
    }
    return out;
  }

  // Phase II: barrier path following on the objective (analytic centre for
  // pure feasibility problems).
  BarrierFunction phase2(blocks, n, options_.radius, false);
  Vector c = Vector::Zero(n);
  if (problem.objective()) {
    for (const auto& [k, coef] : problem.objective()->terms()) c(k) = coef(0, 0);
    if (problem.maximizing()) c = -c;
  }
  const double m2 = phase2.barrier_order();
  SdpStatus status = SdpStatus::Feasible;
  if (c.norm() == 0.0) {
    const auto r = center(phase2, x, 0.0, c, budget);
    if (r == CenterResult::OutOfBudget) status = SdpStatus::Inaccurate;
  } else {
    double t = 1.0 / c.norm();
    while (true) {
      const auto r = center(phase2, x, t, c, budget);
      if (r == CenterResult::OutOfBudget) {
        status = SdpStatus::Inaccurate;
        break;
      }
      const double gap = m2 / t;
      if (gap <= options_.gap_tolerance * std::max(1.0, std::abs(c.dot(x)))) break;
      if (r == CenterResult::Stalled) {
        // Newton cannot make progress at this accuracy; accept a gap that is
        // still small relative to the objective.
        if (gap > 1e3 * options_.gap_tolerance * std::max(1.0, std::abs(c.dot(x)))) status = SdpStatus::Inaccurate;
        break;
      }
      t *= 10.0;
    }
  }

  fill_constraint_report(problem, x, out);
  out.newton_steps = options_.max_newton_steps - budget;
  out.status = status;
  if (status == SdpStatus::Feasible && out.min_eigenvalue < -kFeasibilityTolerance) {
    out.status = SdpStatus::Inaccurate;
    out.message = "returned point violates a constraint by " + std::to_string(-out.min_eigenvalue);
  }
  if (status == SdpStatus::Inaccurate && out.message.empty()) out.message = "barrier iterations did not converge";
  return out;
}

}  // namespace safeloop
