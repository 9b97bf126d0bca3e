#include "safeloop/analysis.hpp"

#include "safeloop/lmi.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

namespace safeloop {
namespace {

struct Outcome {
  GridPointReport report;
  std::optional<Certificate> cert;
};

struct Loop {
  Matrix A, B;
};

Loop primary_loop(const ClosedLoop& cl) {
  if (!cl.secondary_decoupled())
    throw Error(ErrorKind::InvalidArgument,
                "analysis needs the primary-only loop (E_u = 0 and C_S = 0): the secondary states are coupled");
  return {cl.A1(), cl.B1()};
}

void check_attack(const Matrix& Ra, Index na) {
  if (Ra.rows() != na || Ra.cols() != na)
    throw Error(ErrorKind::DimensionMismatch, "R_a is " + shape_string(Ra) + ", attack channel has " +
                                                  std::to_string(na) + " entries");
  if (!is_symmetric(Ra, kSymmetryTolerance * std::max(1.0, Ra.cwiseAbs().maxCoeff())))
    throw Error(ErrorKind::NotSymmetric, "R_a is not symmetric");
  if (!is_pd(Ra)) throw Error(ErrorKind::NotPositiveDefinite, "R_a is not positive definite");
}

void check_safe(const Ellipsoid& safe, Index n1) {
  if (safe.dim() != n1)
    throw Error(ErrorKind::DimensionMismatch, "safe set has dimension " + std::to_string(safe.dim()) +
                                                  ", the certified coordinates have " + std::to_string(n1));
}

AffineExpr floor_constraint(const AffineExpr& v) {
  return v - AffineExpr(Matrix(kDefiniteFloor * Matrix::Identity(v.rows(), v.rows())));
}

// Containment, if requested, is recorded on the certificate by an
// independent golden-section check rather than trusted from the solve.
void finish_certificate(Certificate& c, const Loop& loop, const Matrix& Ra, const Ellipsoid* safe) {
  c.Q = symmetrized(c.Q);
  c.lmi_margin = invariance_margin(loop.A, loop.B, c.Q, Ra, c.alpha, c.beta);
  c.objective = c.Q.trace();
  if (safe != nullptr && is_pd(c.Q)) {
    const Containment k = contains_by_search(Ellipsoid(c.Q), *safe);
    c.contained = k.contained;
    c.tau = k.tau;
  }
}

// Fixed attack bound: variables Q and beta, maximize Tr Q.
Outcome solve_fixed_attack(const Loop& loop, const Matrix& Ra, const Ellipsoid* safe, double alpha,
                           std::optional<double> delta_factor, const SdpOptions& opts) {
  const Index n = loop.A.rows(), na = loop.B.cols();
  SdpProblem p;
  const Variable Qv = p.add_symmetric("Q", n);
  const Variable bv = p.add_scalar("beta");
  const AffineExpr Q = AffineExpr::of(Qv);
  AffineExpr m = -build_E1(loop.A, loop.B, Q) - alpha * build_F(Q, na);
  m.add_term(bv.offset, -build_S(AffineExpr(Ra), n).constant());
  p.add_psd(m, "invariance");
  p.add_psd(AffineExpr::of(bv), "beta >= 0");
  p.add_psd(floor_constraint(Q), "Q floor");
  std::optional<double> tau;
  if (safe != nullptr && delta_factor) {
    tau = *delta_factor * containment_scale(*safe);
    p.add_nsd(containment_lmi(Q, *safe, *tau), "containment");
  }
  p.maximize(Q.trace());

  Outcome out;
  out.report.alpha = alpha;
  out.report.delta = tau;
  const SdpSolution s = sdp_solve(p, opts);
  out.report.status = s.status;
  out.report.message = s.message;
  const Family family = (safe != nullptr && delta_factor) ? Family::Containment : Family::Invariance;
  // A point with an empty interior yields no certificate either.
  if (s.status == SdpStatus::Infeasible || s.status == SdpStatus::Inaccurate) out.report.failed = family;
  if (!s.feasible()) return out;

  Certificate c;
  c.Q = s.value("Q");
  c.alpha = alpha;
  c.beta = s.scalar("beta");
  c.delta = tau;
  finish_certificate(c, loop, Ra, delta_factor ? safe : nullptr);
  out.report.beta = c.beta;
  out.report.objective = c.objective;
  if (c.lmi_margin < -kFeasibilityTolerance || (safe != nullptr && delta_factor && !c.contained)) {
    out.report.status = SdpStatus::Inaccurate;
    out.report.message = "solver point failed the independent re-check";
    out.report.failed = family;
    return out;
  }
  out.cert = std::move(c);
  return out;
}

// Variable attack bound: variables Q and Ra, fixed alpha, beta, delta;
// minimize Tr Ra.
Outcome solve_variable_attack(const Loop& loop, const Ellipsoid* safe, double alpha, double beta,
                              std::optional<double> delta_factor, const SdpOptions& opts) {
  const Index n = loop.A.rows(), na = loop.B.cols();
  SdpProblem p;
  const Variable Qv = p.add_symmetric("Q", n);
  const Variable Rv = p.add_symmetric("Ra", na);
  const AffineExpr Q = AffineExpr::of(Qv);
  const AffineExpr Ra = AffineExpr::of(Rv);
  p.add_psd(-build_E1(loop.A, loop.B, Q) - alpha * build_F(Q, na) - beta * build_S(Ra, n), "invariance");
  p.add_psd(floor_constraint(Q), "Q floor");
  p.add_psd(floor_constraint(Ra), "R_a floor");
  std::optional<double> tau;
  if (safe != nullptr && delta_factor) {
    tau = *delta_factor * containment_scale(*safe);
    p.add_nsd(containment_lmi(Q, *safe, *tau), "containment");
  }
  p.minimize(Ra.trace());

  Outcome out;
  out.report.alpha = alpha;
  out.report.beta = beta;
  out.report.delta = tau;
  const SdpSolution s = sdp_solve(p, opts);
  out.report.status = s.status;
  out.report.message = s.message;
  const Family family = (safe != nullptr && delta_factor) ? Family::Containment : Family::Invariance;
  // A point with an empty interior yields no certificate either.
  if (s.status == SdpStatus::Infeasible || s.status == SdpStatus::Inaccurate) out.report.failed = family;
  if (!s.feasible()) return out;

  Certificate c;
  c.Q = s.value("Q");
  c.alpha = alpha;
  c.beta = beta;
  c.delta = tau;
  const Matrix ra = symmetrized(s.value("Ra"));
  finish_certificate(c, loop, ra, delta_factor ? safe : nullptr);
  c.Ra = ra;
  c.objective = ra.trace();
  out.report.objective = c.objective;
  if (c.lmi_margin < -kFeasibilityTolerance || (safe != nullptr && delta_factor && !c.contained)) {
    out.report.status = SdpStatus::Inaccurate;
    out.report.message = "solver point failed the independent re-check";
    out.report.failed = family;
    return out;
  }
  out.cert = std::move(c);
  return out;
}

// Deterministic reduction: best objective wins; earlier grid points (smaller
// alpha, then beta, then delta) win ties.
std::optional<Certificate> pick_best(const std::vector<Outcome>& outcomes, bool maximize) {
  std::optional<Certificate> best;
  for (const auto& o : outcomes) {
    if (!o.cert) continue;
    const double v = *o.cert->objective;
    if (!best || (maximize ? v > *best->objective : v < *best->objective)) best = o.cert;
  }
  return best;
}

std::string describe_best(const Certificate& c) {
  char buf[160];
  std::snprintf(buf, sizeof buf, "best point alpha = %.6g, beta = %.6g, objective = %.9g", c.alpha, c.beta,
                c.objective.value_or(0.0));
  return buf;
}

}  // namespace

std::string_view to_string(Family f) {
  switch (f) {
    case Family::None: return "none";
    case Family::Invariance: return "invariance";
    case Family::Containment: return "containment";
    case Family::Skipped: return "skipped";
  }
  return "none";
}

std::string_view to_string(Verdict v) {
  switch (v) {
    case Verdict::Certified: return "certified";
    case Verdict::ContainmentFails: return "containment-fails";
    case Verdict::InvarianceInfeasible: return "invariance-infeasible";
  }
  return "invariance-infeasible";
}

std::vector<double> ScalarGrid::log_spaced() {
  std::vector<double> v;
  for (int k = 0; k < 16; ++k) v.push_back(std::exp2(-6.0 + 10.0 * k / 15.0));
  v[9] = 1.0;  // 2^0 exactly
  return v;
}

ScalarGrid ScalarGrid::defaults() { return {log_spaced(), log_spaced(), {0.5, 0.9, 0.99, 1.0}}; }

void ScalarGrid::validate() const {
  auto check = [](const std::vector<double>& v, const char* name) {
    if (v.empty()) throw Error(ErrorKind::InvalidArgument, std::string("scalar grid: ") + name + " is empty");
    for (double x : v)
      if (!(x >= 0.0) || !std::isfinite(x))
        throw Error(ErrorKind::InvalidArgument, std::string("scalar grid: ") + name + " must be finite and nonnegative");
    if (!std::is_sorted(v.begin(), v.end()))
      throw Error(ErrorKind::InvalidArgument, std::string("scalar grid: ") + name + " must be sorted ascending");
  };
  check(alphas, "alphas");
  check(betas, "betas");
  check(deltas, "deltas");
}

double invariance_margin(const Matrix& A, const Matrix& B, const Matrix& Q, const Matrix& Ra, double alpha,
                         double beta) {
  const Index n = A.rows(), na = B.cols();
  const Matrix m = -build_E1(A, B, AffineExpr(Q)).constant() - alpha * build_F(AffineExpr(Q), na).constant() -
                   beta * build_S(AffineExpr(Ra), n).constant();
  return min_eigenvalue(m);
}

bool recheck(const Certificate& cert, const ClosedLoop& cl, const Matrix& Ra, const std::optional<Ellipsoid>& safe,
             double tol) {
  const Loop loop = primary_loop(cl);
  if (!is_pd(cert.Q)) return false;
  const Matrix& ra = cert.Ra ? *cert.Ra : Ra;
  if (invariance_margin(loop.A, loop.B, cert.Q, ra, cert.alpha, cert.beta) < -tol) return false;
  if (cert.contained && safe) return contains_by_search(Ellipsoid(cert.Q), *safe).contained;
  return true;
}

AnalysisResult find_invariant_unconstrained(const ClosedLoop& cl, const Matrix& Ra, const ScalarGrid& grid,
                                            const AnalysisOptions& options) {
  grid.validate();
  const Loop loop = primary_loop(cl);
  check_attack(Ra, loop.B.cols());
  const auto outcomes = map_indices<Outcome>(
      grid.alphas.size(),
      [&](std::size_t i) { return solve_fixed_attack(loop, Ra, nullptr, grid.alphas[i], std::nullopt, options.sdp); },
      options.execution);
  AnalysisResult r;
  for (const auto& o : outcomes) r.points.push_back(o.report);
  r.certificate = pick_best(outcomes, true);
  r.verdict = r.certificate ? Verdict::Certified : Verdict::InvarianceInfeasible;
  r.message = r.certificate ? describe_best(*r.certificate) : "invariance LMI infeasible at every alpha";
  return r;
}

AnalysisResult verify_safety(const ClosedLoop& cl, const Matrix& Ra, const Ellipsoid& safe, const ScalarGrid& grid,
                             const AnalysisOptions& options) {
  grid.validate();
  const Loop loop = primary_loop(cl);
  check_attack(Ra, loop.B.cols());
  check_safe(safe, loop.A.rows());

  // Invariance alone first, so a failure can be attributed to its family.
  const auto unconstrained = map_indices<Outcome>(
      grid.alphas.size(),
      [&](std::size_t i) { return solve_fixed_attack(loop, Ra, nullptr, grid.alphas[i], std::nullopt, options.sdp); },
      options.execution);

  struct Task {
    double alpha, delta;
  };
  std::vector<Task> tasks;
  for (std::size_t i = 0; i < grid.alphas.size(); ++i)
    if (unconstrained[i].cert)
      for (double d : grid.deltas) tasks.push_back({grid.alphas[i], d});
  const auto bound = map_indices<Outcome>(
      tasks.size(),
      [&](std::size_t i) { return solve_fixed_attack(loop, Ra, &safe, tasks[i].alpha, tasks[i].delta, options.sdp); },
      options.execution);

  AnalysisResult r;
  std::size_t next = 0;
  for (std::size_t i = 0; i < grid.alphas.size(); ++i) {
    if (!unconstrained[i].cert) {
      r.points.push_back(unconstrained[i].report);
      continue;
    }
    for (std::size_t d = 0; d < grid.deltas.size(); ++d) r.points.push_back(bound[next++].report);
  }
  r.certificate = pick_best(bound, true);
  if (r.certificate) {
    r.verdict = Verdict::Certified;
    r.message = describe_best(*r.certificate);
  } else if (pick_best(unconstrained, true)) {
    r.verdict = Verdict::ContainmentFails;
    r.message = "an invariant ellipsoid exists but none found inside the safe set";
  } else {
    r.verdict = Verdict::InvarianceInfeasible;
    r.message = "invariance LMI infeasible at every alpha";
  }
  return r;
}

AnalysisResult assess_worst_attack(const ClosedLoop& cl, const Ellipsoid& safe, const ScalarGrid& grid,
                                   const AnalysisOptions& options) {
  grid.validate();
  const Loop loop = primary_loop(cl);
  check_safe(safe, loop.A.rows());

  struct Pair {
    double alpha, beta;
  };
  std::vector<Pair> pairs;
  AnalysisResult r;
  for (double a : grid.alphas)
    for (double b : grid.betas) pairs.push_back({a, b});

  // The [1,1] entry of the invariance LMI is alpha - beta.
  auto admissible = [](const Pair& p) { return p.beta <= p.alpha; };
  const auto unconstrained = map_indices<Outcome>(
      pairs.size(),
      [&](std::size_t i) -> Outcome {
        if (!admissible(pairs[i])) return {};
        return solve_variable_attack(loop, nullptr, pairs[i].alpha, pairs[i].beta, std::nullopt, options.sdp);
      },
      options.execution);

  struct Task {
    double alpha, beta, delta;
  };
  std::vector<Task> tasks;
  for (std::size_t i = 0; i < pairs.size(); ++i)
    if (unconstrained[i].cert)
      for (double d : grid.deltas) tasks.push_back({pairs[i].alpha, pairs[i].beta, d});
  const auto bound = map_indices<Outcome>(
      tasks.size(),
      [&](std::size_t i) {
        return solve_variable_attack(loop, &safe, tasks[i].alpha, tasks[i].beta, tasks[i].delta, options.sdp);
      },
      options.execution);

  std::size_t next = 0;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    if (!admissible(pairs[i])) {
      GridPointReport skip;
      skip.alpha = pairs[i].alpha;
      skip.beta = pairs[i].beta;
      skip.status = SdpStatus::Infeasible;
      skip.failed = Family::Skipped;
      skip.message = "beta > alpha makes the invariance LMI infeasible";
      r.points.push_back(skip);
    } else if (!unconstrained[i].cert) {
      r.points.push_back(unconstrained[i].report);
    } else {
      for (std::size_t d = 0; d < grid.deltas.size(); ++d) r.points.push_back(bound[next++].report);
    }
  }
  r.certificate = pick_best(bound, false);
  if (r.certificate) {
    r.verdict = Verdict::Certified;
    r.message = describe_best(*r.certificate);
  } else if (pick_best(unconstrained, false)) {
    r.verdict = Verdict::ContainmentFails;
    r.message = "no attack bound keeps an invariant ellipsoid inside the safe set on this grid";
  } else {
    r.verdict = Verdict::InvarianceInfeasible;
    r.message = "invariance LMI infeasible at every (alpha, beta)";
  }
  return r;
}

}  // namespace safeloop
