#include "safeloop/synthesis.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

namespace safeloop {
namespace {

double condition_number(const Matrix& m) {
  Eigen::JacobiSVD<Matrix> svd(m);
  const Vector s = svd.singularValues();
  if (s.size() == 0) return 1.0;
  const double lo = s(s.size() - 1);
  return lo > 0.0 ? s(0) / lo : std::numeric_limits<double>::infinity();
}

Matrix floor_matrix(Index n) { return kDefiniteFloor * Matrix::Identity(n, n); }

void check_inputs(const HatSystem& hat, const Ellipsoid& safe, const std::optional<Matrix>& Ra) {
  hat.validate();
  if (safe.dim() != hat.n1())
    throw Error(ErrorKind::DimensionMismatch, "safe set has dimension " + std::to_string(safe.dim()) +
                                                  ", the hat system has n1 = " + std::to_string(hat.n1()));
  if (Ra) {
    require_dims(Ra->rows() == hat.na() && Ra->cols() == hat.na(), "R_a", *Ra, "B1cal", hat.B1);
    if (!is_pd(*Ra)) throw Error(ErrorKind::NotPositiveDefinite, "R_a is not positive definite");
  }
}

struct Instance {
  double alpha = 0.0;
  std::optional<double> beta;  // fixed beta (variable attack shape)
  double delta = 0.0;          // absolute
  bool containment = true;
  std::optional<Matrix> fixed_X;
};

struct Solved {
  SdpSolution solution;
  SynthesisVars eta;
  Matrix Ra;
  double beta = 0.0;
};

SdpProblem build_instance(const HatSystem& hat, const Ellipsoid& safe, const std::optional<Matrix>& Ra_fixed,
                          const Instance& in, Objective objective, const SynthesisOptions& options) {
  const Index n1 = hat.n1(), na = hat.na();
  SdpProblem p;
  EtaExprs eta;
  if (in.fixed_X) {
    eta.X = AffineExpr(*in.fixed_X);
    eta.Y = AffineExpr::of(p.add_symmetric("Y", n1));
    eta.A = AffineExpr::of(p.add_matrix("A", n1, n1));
    eta.B = AffineExpr::of(p.add_matrix("B", n1, hat.my()));
    eta.C = AffineExpr::of(p.add_matrix("C", hat.mu(), n1));
    eta.D = AffineExpr::of(p.add_matrix("D", hat.mu(), hat.my()));
  } else {
    eta = EtaExprs::of(declare_eta(p, hat));
  }

  AffineExpr inv = build_E2bf(eta, hat) + in.alpha * build_Fbf(eta, na);
  std::optional<Variable> beta_var, ra_var;
  if (Ra_fixed) {
    beta_var = p.add_scalar("beta");
    inv.add_term(beta_var->offset, build_Sbf(AffineExpr(*Ra_fixed), n1).constant());
    p.add_psd(AffineExpr::of(*beta_var), "beta >= 0");
  } else {
    ra_var = p.add_symmetric("Ra", na);
    const AffineExpr ra = AffineExpr::of(*ra_var);
    inv += *in.beta * build_Sbf(ra, n1);
    p.add_psd(ra - AffineExpr(floor_matrix(na)), "R_a floor");
  }
  p.add_nsd(inv, "invariance");
  p.add_psd(build_P_eta(eta) - AffineExpr(Matrix(options.coupling_floor * Matrix::Identity(2 * n1, 2 * n1))),
            "coupling");
  if (in.containment) {
    const auto [J, L] = build_containment_JL(eta.X, safe);
    p.add_nsd(J - in.delta * L, "containment");
  }
  if (objective == Objective::MinTraceAttack && ra_var) p.minimize(AffineExpr::of(*ra_var).trace());
  if (objective == Objective::MinTraceX && !in.fixed_X) p.minimize(eta.X.trace());
  return p;
}

Solved solve_instance(const HatSystem& hat, const Ellipsoid& safe, const std::optional<Matrix>& Ra_fixed,
                      const Instance& in, Objective objective, const SynthesisOptions& options) {
  Solved out;
  out.solution = sdp_solve(build_instance(hat, safe, Ra_fixed, in, objective, options), options.sdp);
  if (out.solution.status == SdpStatus::Feasible || out.solution.status == SdpStatus::Inaccurate) {
    const SdpSolution& s = out.solution;
    out.eta = {in.fixed_X ? *in.fixed_X : s.value("X"), s.value("Y"), s.value("A"), s.value("B"), s.value("C"),
               s.value("D")};
    out.eta.X = symmetrized(out.eta.X);
    out.eta.Y = symmetrized(out.eta.Y);
    out.Ra = Ra_fixed ? *Ra_fixed : symmetrized(s.value("Ra"));
    out.beta = Ra_fixed ? s.scalar("beta") : *in.beta;
  }
  return out;
}

void fill_margins(SynthesisResult& r, const HatSystem& hat, const Ellipsoid& safe) {
  const EtaExprs e = EtaExprs::of(*r.eta);
  const Index n1 = hat.n1(), na = hat.na();
  const Matrix inv = build_E2bf(e, hat).constant() + r.alpha * build_Fbf(e, na).constant() +
                     r.beta * build_Sbf(AffineExpr(r.Ra), n1).constant();
  r.invariance_margin = min_eigenvalue(-inv);
  r.coupling_margin = min_eigenvalue(build_P_eta(e).constant());
  const auto [J, L] = build_containment_JL(e.X, safe);
  r.containment_margin = min_eigenvalue(-(J.constant() - r.delta * L.constant()));
  r.condition = condition_number(Matrix::Identity(n1, n1) - r.eta->X * r.eta->Y);
}

std::string point_message(const SdpSolution& s) { return s.message; }

}  // namespace

std::string_view to_string(Objective o) {
  switch (o) {
    case Objective::Feasibility: return "feasibility";
    case Objective::MinTraceAttack: return "min-trace-attack";
    case Objective::MinTraceX: return "min-trace-x";
  }
  return "feasibility";
}

std::optional<Objective> objective_from_string(std::string_view s) {
  for (Objective o : {Objective::Feasibility, Objective::MinTraceAttack, Objective::MinTraceX})
    if (to_string(o) == s) return o;
  return std::nullopt;
}

namespace {

void check_scalars(const std::optional<Matrix>& Ra, const SynthesisScalars& scalars, Objective objective) {
  if (!Ra && !scalars.beta)
    throw Error(ErrorKind::InvalidArgument, "beta must be fixed when the attack shape is a decision variable");
  if (Ra && objective == Objective::MinTraceAttack)
    throw Error(ErrorKind::InvalidArgument, "min-trace-attack needs a variable attack shape");
  if (!Ra && objective == Objective::MinTraceX)
    throw Error(ErrorKind::InvalidArgument, "min-trace-x needs a fixed attack shape");
  if (!(scalars.alpha >= 0.0) || !(scalars.delta >= 0.0) || (scalars.beta && !(*scalars.beta >= 0.0)))
    throw Error(ErrorKind::InvalidArgument, "alpha, beta and delta must be nonnegative");
}

Instance make_instance(const Ellipsoid& safe, const std::optional<Matrix>& Ra, const SynthesisScalars& scalars) {
  Instance in;
  in.alpha = scalars.alpha;
  in.beta = Ra ? std::nullopt : scalars.beta;
  in.delta = scalars.delta * containment_scale(safe);
  return in;
}

}  // namespace

SdpProblem synthesis_problem(const HatSystem& hat, const Ellipsoid& safe, const std::optional<Matrix>& Ra,
                             const SynthesisScalars& scalars, Objective objective, const SynthesisOptions& options) {
  check_inputs(hat, safe, Ra);
  check_scalars(Ra, scalars, objective);
  return build_instance(hat, safe, Ra, make_instance(safe, Ra, scalars), objective, options);
}

SynthesisResult synthesize(const HatSystem& hat, const Ellipsoid& safe, const std::optional<Matrix>& Ra,
                           const SynthesisScalars& scalars, Objective objective, const SynthesisOptions& options) {
  check_inputs(hat, safe, Ra);
  check_scalars(Ra, scalars, objective);
  const Instance in = make_instance(safe, Ra, scalars);

  SynthesisResult r;
  r.alpha = in.alpha;
  r.delta = in.delta;
  SynthesisPoint pt;
  pt.alpha = in.alpha;
  pt.beta = in.beta;
  pt.delta = in.delta;

  Solved s = solve_instance(hat, safe, Ra, in, objective, options);
  pt.status = s.solution.status;
  pt.message = point_message(s.solution);
  if (s.solution.status != SdpStatus::Feasible) {
    if (s.solution.status == SdpStatus::Infeasible) {
      Instance relaxed = in;
      relaxed.containment = false;
      const Solved t = solve_instance(hat, safe, Ra, relaxed, Objective::Feasibility, options);
      pt.failed = t.solution.status == SdpStatus::Feasible ? Family::Containment : Family::Invariance;
      r.message = std::string("infeasible: ") + std::string(to_string(pt.failed)) + " constraints fail";
    } else {
      r.message = std::string(to_string(s.solution.status)) + ": " + s.solution.message;
    }
    r.points.push_back(pt);
    return r;
  }

  const Index n1 = hat.n1();
  double cond = condition_number(Matrix::Identity(n1, n1) - s.eta.X * s.eta.Y);
  if (cond > options.condition_limit) {
    Instance nudged = in;
    nudged.fixed_X = s.eta.X + 1e-6 * s.eta.X.trace() / static_cast<double>(n1) * Matrix::Identity(n1, n1);
    const Objective rest = objective == Objective::MinTraceX ? Objective::Feasibility : objective;
    Solved t = solve_instance(hat, safe, Ra, nudged, rest, options);
    if (t.solution.status != SdpStatus::Feasible) {
      pt.status = t.solution.status;
      pt.message = "re-solve after perturbing X failed: " + t.solution.message;
      r.message = pt.message;
      r.points.push_back(pt);
      return r;
    }
    s = std::move(t);
    r.perturbed = true;
  }

  r.feasible = true;
  r.eta = s.eta;
  r.Ra = s.Ra;
  r.beta = s.beta;
  pt.beta = s.beta;
  if (objective == Objective::MinTraceAttack) r.objective = s.Ra.trace();
  if (objective == Objective::MinTraceX) r.objective = s.eta.X.trace();
  pt.objective = r.objective;
  fill_margins(r, hat, safe);
  char buf[128];
  std::snprintf(buf, sizeof buf, "feasible, cond(I - XY) = %.3e%s", r.condition,
                r.perturbed ? " after perturbing X" : "");
  r.message = buf;
  r.points.push_back(pt);
  return r;
}

SynthesisResult synthesize_grid(const HatSystem& hat, const Ellipsoid& safe, const std::optional<Matrix>& Ra,
                                const ScalarGrid& grid, Objective objective, const SynthesisOptions& options) {
  grid.validate();
  check_inputs(hat, safe, Ra);
  std::vector<SynthesisScalars> tasks;
  for (double a : grid.alphas) {
    if (Ra) {
      for (double d : grid.deltas) tasks.push_back({a, std::nullopt, d});
    } else {
      for (double b : grid.betas)
        if (b <= a)
          for (double d : grid.deltas) tasks.push_back({a, b, d});
    }
  }
  SynthesisOptions inner = options;
  inner.execution = Execution::Serial;
  const auto results = map_indices<SynthesisResult>(
      tasks.size(), [&](std::size_t i) { return synthesize(hat, safe, Ra, tasks[i], objective, inner); },
      options.execution);

  SynthesisResult best;
  bool found = false;
  std::vector<SynthesisPoint> points;
  bool any_invariant = false;
  for (const auto& r : results) {
    points.insert(points.end(), r.points.begin(), r.points.end());
    for (const auto& p : r.points) any_invariant = any_invariant || p.failed == Family::Containment;
    if (!r.feasible) continue;
    any_invariant = true;
    const bool better = !found || (objective != Objective::Feasibility && *r.objective < *best.objective);
    if (better) {
      best = r;
      found = true;
    }
  }
  if (!found) {
    best = SynthesisResult{};
    best.message = any_invariant ? "infeasible at every grid point: containment constraints fail"
                                 : "infeasible at every grid point: invariance constraints fail";
  }
  best.points = std::move(points);
  return best;
}

SynthesisResult minimize_invariant_volume(const HatSystem& hat, const Ellipsoid& safe, const Matrix& Ra,
                                          const SynthesisScalars& scalars, const SynthesisOptions& options) {
  return synthesize(hat, safe, Ra, scalars, Objective::MinTraceX, options);
}

Recovery recover_controller(const SynthesisVars& eta, const HatSystem& hat, const std::optional<Matrix>& M_choice) {
  hat.validate();
  const Index n1 = hat.n1();
  require_dims(eta.X.rows() == n1 && eta.X.cols() == n1, "X", eta.X, "Ahat", hat.Ahat);
  require_dims(eta.Y.rows() == n1 && eta.Y.cols() == n1, "Y", eta.Y, "Ahat", hat.Ahat);
  require_dims(eta.A.rows() == n1 && eta.A.cols() == n1, "A", eta.A, "Ahat", hat.Ahat);
  require_dims(eta.B.rows() == n1 && eta.B.cols() == hat.my(), "B", eta.B, "Chat", hat.Chat);
  require_dims(eta.C.rows() == hat.mu() && eta.C.cols() == n1, "C", eta.C, "Bhat", hat.Bhat);
  require_dims(eta.D.rows() == hat.mu() && eta.D.cols() == hat.my(), "D", eta.D, "Bhat", hat.Bhat);
  const Matrix I = Matrix::Identity(n1, n1);
  const Matrix M = M_choice ? *M_choice : I;
  require_dims(M.rows() == n1 && M.cols() == n1, "M", M, "X", eta.X);

  const Matrix& X = eta.X;
  const Matrix& Y = eta.Y;
  const Matrix IXY = I - X * Y;
  const double cond = condition_number(IXY);
  if (!(cond < 1e14))
    throw Error(ErrorKind::Singular, "I - XY is numerically singular (condition number " + std::to_string(cond) +
                                         "); perturb X or choose a different M");
  const Eigen::PartialPivLU<Matrix> Mlu(M);
  if (!(condition_number(M) < 1e14)) throw Error(ErrorKind::Singular, "M is singular");
  const Matrix Mit = Mlu.inverse().transpose();  // M^-T
  const Matrix N = Mlu.solve(IXY).transpose();
  const Eigen::PartialPivLU<Matrix> Nlu(N);

  const Matrix& Ah = hat.Ahat;
  const Matrix& Bh = hat.Bhat;
  const Matrix& Ch = hat.Chat;
  SecondaryController sc;
  sc.D = eta.D;
  sc.C = (eta.C - sc.D * Ch * X) * Mit;
  sc.B = Nlu.solve(eta.B - Y * Bh * sc.D);
  sc.A = Nlu.solve(eta.A - Y * (Ah + Bh * sc.D * Ch) * X - Y * Bh * sc.C * M.transpose() - N * sc.B * Ch * X) * Mit;

  // P = Pi2 Pi1^-1 in closed form, Pi1^-1 = [[0, M^-T], [I, -X M^-T]].
  Matrix P(2 * n1, 2 * n1);
  P << Y, (I - Y * X) * Mit, N.transpose(), -N.transpose() * X * Mit;
  return {sc, {M, N, symmetrized(P), cond}};
}

SynthesisVars forward_change_of_variables(const SecondaryController& sc, const HatSystem& hat, const Matrix& X,
                                          const Matrix& Y, const Matrix& M, const Matrix& N) {
  const Matrix& Ah = hat.Ahat;
  const Matrix& Bh = hat.Bhat;
  const Matrix& Ch = hat.Chat;
  SynthesisVars eta;
  eta.X = X;
  eta.Y = Y;
  eta.D = sc.D;
  eta.C = sc.D * Ch * X + sc.C * M.transpose();
  eta.B = Y * Bh * sc.D + N * sc.B;
  eta.A = Y * (Ah + Bh * sc.D * Ch) * X + Y * Bh * sc.C * M.transpose() + N * sc.B * Ch * X +
          N * sc.A * M.transpose();
  return eta;
}

SynthesisCertificate certify(const HatSystem& hat, const SecondaryController& sc, const Matrix& Ra,
                             const Ellipsoid& safe, double alpha, double beta, const Matrix& P,
                             const std::optional<Matrix>& X) {
  const ClosedLoop cl = closed_loop_from_hat(hat, sc);
  require_dims(P.rows() == cl.dim() && P.cols() == cl.dim(), "P", P, "closed-loop A", cl.A());
  require_dims(Ra.rows() == cl.na() && Ra.cols() == cl.na(), "R_a", Ra, "closed-loop B", cl.B());
  if (safe.dim() != hat.n1())
    throw Error(ErrorKind::DimensionMismatch, "safe set dimension does not match n1");

  SynthesisCertificate out;
  out.P = symmetrized(P);
  out.certificate.alpha = alpha;
  out.certificate.beta = beta;
  out.p_min_eigenvalue = min_eigenvalue(out.P);
  if (!is_pd(out.P)) {
    out.failed_check = "P positive definite";
    return out;
  }
  out.lmi_margin = invariance_margin(cl.A(), cl.B(), out.P, Ra, alpha, beta);
  out.certificate.lmi_margin = out.lmi_margin;
  out.certificate.Q = project(out.P, hat.n1()).shape;
  out.certificate.objective = out.certificate.Q.trace();
  if (out.lmi_margin < -kCertificationTolerance) {
    out.failed_check = "invariance LMI";
    return out;
  }
  if (X) {
    const Matrix Xinv = symmetrized(X->inverse());
    out.projection_error = relative_error(out.certificate.Q, Xinv);
    if (!(*out.projection_error <= kCertificationTolerance)) {
      out.failed_check = "projection matches X^-1";
      return out;
    }
  }
  if (!is_pd(out.certificate.Q)) {
    out.failed_check = "containment";
    return out;
  }
  const Containment k = contains_by_search(Ellipsoid(out.certificate.Q), safe);
  out.certificate.contained = k.contained;
  out.certificate.tau = k.tau;
  if (!k.contained) {
    out.failed_check = "containment";
    return out;
  }
  out.passed = true;
  return out;
}

}  // namespace safeloop
