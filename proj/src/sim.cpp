#include "safeloop/sim.hpp"

#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>

namespace safeloop {

std::string_view to_string(AttackKind k) {
  switch (k) {
    case AttackKind::Zero: return "zero";
    case AttackKind::ConstantBoundary: return "constant";
    case AttackKind::RandomBoundary: return "random";
    case AttackKind::GreedyWorst: return "greedy";
  }
  return "zero";
}

std::optional<AttackKind> attack_kind_from_string(std::string_view s) {
  for (AttackKind k : {AttackKind::Zero, AttackKind::ConstantBoundary, AttackKind::RandomBoundary,
                       AttackKind::GreedyWorst})
    if (to_string(k) == s) return k;
  return std::nullopt;
}

AttackPolicy::AttackPolicy(AttackKind kind, const Matrix& Ra) : kind_(kind), Ra_(symmetrized(Ra)) {
  if (!is_pd(Ra_)) throw Error(ErrorKind::NotPositiveDefinite, "attack shape R_a is not positive definite");
  Ra_inv_ = symmetrized(Ra_.inverse());
  held_ = Vector::Zero(Ra_.rows());
}

AttackPolicy AttackPolicy::zero(const Matrix& Ra) { return AttackPolicy(AttackKind::Zero, Ra); }

AttackPolicy AttackPolicy::constant(const Matrix& Ra, const Vector& direction) {
  AttackPolicy p(AttackKind::ConstantBoundary, Ra);
  if (direction.size() != p.dim() || direction.isZero(0.0))
    throw Error(ErrorKind::InvalidArgument, "constant attack needs a nonzero direction of size " +
                                                std::to_string(p.dim()));
  p.direction_ = p.to_boundary(direction);
  return p;
}

AttackPolicy AttackPolicy::random(const Matrix& Ra, double dwell, std::uint64_t seed) {
  AttackPolicy p(AttackKind::RandomBoundary, Ra);
  if (!(dwell > 0.0)) throw Error(ErrorKind::InvalidArgument, "dwell time must be positive");
  p.dwell_ = dwell;
  p.seed_ = seed;
  p.reset();
  return p;
}

AttackPolicy AttackPolicy::greedy(const Matrix& Ra, const Matrix& P) {
  AttackPolicy p(AttackKind::GreedyWorst, Ra);
  if (P.rows() != P.cols()) throw Error(ErrorKind::DimensionMismatch, "greedy attack: P is " + shape_string(P));
  p.P_ = symmetrized(P);
  return p;
}

void AttackPolicy::reset() {
  rng_.seed(seed_);
  segment_ = -1;
}

Vector AttackPolicy::to_boundary(const Vector& d) const { return d / std::sqrt(d.dot(Ra_ * d)); }

Vector AttackPolicy::operator()(double t, const Vector& state, const Matrix& B) {
  switch (kind_) {
    case AttackKind::Zero:
      return Vector::Zero(dim());
    case AttackKind::ConstantBoundary:
      return direction_;
    case AttackKind::RandomBoundary: {
      const long seg = static_cast<long>(std::floor(t / dwell_ + 1e-12));
      std::normal_distribution<double> normal;
      while (segment_ < seg) {
        Vector d(dim());
        do {
          for (Index i = 0; i < d.size(); ++i) d(i) = normal(rng_);
        } while (d.isZero(0.0));
        held_ = to_boundary(d);
        ++segment_;
      }
      return held_;
    }
    case AttackKind::GreedyWorst: {
      require_dims(P_.rows() == state.size(), "greedy P", P_, "state", state);
      pz_.noalias() = P_ * state;
      g_.noalias() = B.transpose() * pz_;
      Vector d = Ra_inv_ * g_;
      const double s = g_.dot(d);
      if (!(s > 0.0)) return to_boundary(Vector::Unit(dim(), 0));
      d /= std::sqrt(s);
      return d;
    }
  }
  return Vector::Zero(dim());
}

double max_step(const ClosedLoop& cl) {
  if (cl.dim() == 0) return std::numeric_limits<double>::infinity();
  const double nrm = Eigen::JacobiSVD<Matrix>(cl.A()).singularValues()(0);
  return nrm > 0.0 ? 0.1 / nrm : std::numeric_limits<double>::infinity();
}

double default_step(const ClosedLoop& cl) { return std::min(1e-3, 0.5 * max_step(cl)); }

void integrate_visit(const ClosedLoop& cl, AttackPolicy& policy, const Vector& x0, double horizon, double dt,
                     const std::function<void(double, const Vector&, const Vector&)>& visit) {
  const Matrix& A = cl.A();
  const Matrix& B = cl.B();
  if (x0.size() != cl.dim())
    throw Error(ErrorKind::DimensionMismatch, "initial state has " + std::to_string(x0.size()) +
                                                  " entries, the loop has " + std::to_string(cl.dim()));
  if (policy.dim() != cl.na())
    throw Error(ErrorKind::DimensionMismatch, "attack policy has dimension " + std::to_string(policy.dim()) +
                                                  ", the loop has " + std::to_string(cl.na()) + " attack inputs");
  if (!(dt > 0.0) || !(horizon >= 0.0)) throw Error(ErrorKind::InvalidArgument, "dt must be positive, horizon nonnegative");
  const double limit = max_step(cl);
  if (dt > limit) {
    char buf[128];
    std::snprintf(buf, sizeof buf, "dt = %.6g exceeds the RK4 limit 0.1/||A|| = %.6g", dt, limit);
    throw Error(ErrorKind::StepTooLarge, buf);
  }

  const long steps = std::max(1L, static_cast<long>(std::ceil(horizon / dt - 1e-9)));
  const double h = horizon > 0.0 ? horizon / static_cast<double>(steps) : 0.0;
  policy.reset();
  const Index n = cl.dim();
  Vector x = x0, Ba(n), k1(n), k2(n), k3(n), k4(n), tmp(n);
  for (long k = 0; k <= steps; ++k) {
    const double t = static_cast<double>(k) * h;
    const Vector a = policy(t, x, B);
    visit(t, x, a);
    if (k == steps || h == 0.0) break;
    Ba.noalias() = B * a;
    k1.noalias() = A * x;
    k1 += Ba;
    tmp = x + 0.5 * h * k1;
    k2.noalias() = A * tmp;
    k2 += Ba;
    tmp = x + 0.5 * h * k2;
    k3.noalias() = A * tmp;
    k3 += Ba;
    tmp = x + h * k3;
    k4.noalias() = A * tmp;
    k4 += Ba;
    x += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }
}

Trajectory integrate(const ClosedLoop& cl, AttackPolicy& policy, const Vector& x0, double horizon, double dt) {
  Trajectory tr;
  integrate_visit(cl, policy, x0, horizon, dt, [&](double t, const Vector& x, const Vector& a) {
    tr.times.push_back(t);
    tr.states.push_back(x);
    tr.attacks.push_back(a);
  });
  return tr;
}

namespace {

struct SafetyAccumulator {
  SafetyAccumulator(const Ellipsoid& safe, const Matrix& invariant, const Matrix& Ra)
      : safe(safe), invariant(invariant), Ra(Ra), d(safe.dim()), sd(safe.dim()), pz(invariant.rows()), ra(Ra.rows()) {}

  const Ellipsoid& safe;
  const Matrix& invariant;
  const Matrix& Ra;
  Vector d, sd, pz, ra;  // scratch, avoids allocating per sample
  SafetyReport r;

  void operator()(double t, const Vector& z, const Vector& a) {
    const Index ni = invariant.rows();
    d = z.head(safe.dim()) - safe.center();
    sd.noalias() = safe.shape() * d;
    const double s = d.dot(sd);
    pz.noalias() = invariant * z.head(ni);
    const double v = z.head(ni).dot(pz);
    r.max_safe_level = std::max(r.max_safe_level, s);
    r.max_invariant_level = std::max(r.max_invariant_level, v);
    if (!r.first_violation && s > 1.0 + kMembershipTolerance) r.first_violation = t;
    if (!r.first_invariant_violation && v > 1.0 + kInvariantSlack) r.first_invariant_violation = t;
    if (Ra.size() != 0) {
      ra.noalias() = Ra * a;
      if (a.dot(ra) > 1.0 + 1e-9) r.attacks_admissible = false;
    }
  }
};

}  // namespace

SafetyReport check_safety(const Trajectory& traj, const Ellipsoid& safe, const Matrix& invariant, const Matrix& Ra) {
  SafetyAccumulator acc(safe, invariant, Ra);
  for (std::size_t k = 0; k < traj.states.size(); ++k) acc(traj.times[k], traj.states[k], traj.attacks[k]);
  return acc.r;
}

void write_csv(std::ostream& os, const Trajectory& traj) {
  const Index n = traj.states.empty() ? 0 : traj.states.front().size();
  const Index m = traj.attacks.empty() ? 0 : traj.attacks.front().size();
  os << "t";
  for (Index i = 1; i <= n; ++i) os << ",zeta_" << i;
  for (Index i = 1; i <= m; ++i) os << ",a_" << i;
  os << "\n";
  char buf[32];
  auto put = [&](double v) {
    std::snprintf(buf, sizeof buf, "%.17g", v);
    os << buf;
  };
  for (std::size_t k = 0; k < traj.times.size(); ++k) {
    put(traj.times[k]);
    for (Index i = 0; i < n; ++i) {
      os << ",";
      put(traj.states[k](i));
    }
    for (Index i = 0; i < m; ++i) {
      os << ",";
      put(traj.attacks[k](i));
    }
    os << "\n";
  }
}

Vector sample_on_level(const Matrix& P, double level, std::mt19937_64& rng) {
  if (!is_pd(P)) throw Error(ErrorKind::NotPositiveDefinite, "sample_on_level: shape is not positive definite");
  std::normal_distribution<double> normal;
  Vector u(P.rows());
  do {
    for (Index i = 0; i < u.size(); ++i) u(i) = normal(rng);
  } while (u.isZero(0.0));
  return u * std::sqrt(level / u.dot(P * u));
}

std::vector<Trajectory> simulate_batch(const ClosedLoop& cl, std::vector<BatchRun> runs, double horizon, double dt,
                                       Execution execution) {
  return map_indices<Trajectory>(
      runs.size(), [&](std::size_t i) { return integrate(cl, runs[i].policy, runs[i].x0, horizon, dt); }, execution);
}

std::vector<SafetyReport> check_batch(const ClosedLoop& cl, std::vector<BatchRun> runs, double horizon, double dt,
                                      const Ellipsoid& safe, const Matrix& invariant, Execution execution) {
  return map_indices<SafetyReport>(
      runs.size(),
      [&](std::size_t i) {
        SafetyAccumulator acc(safe, invariant, runs[i].policy.Ra());
        integrate_visit(cl, runs[i].policy, runs[i].x0, horizon, dt, std::ref(acc));
        return acc.r;
      },
      execution);
}

}  // namespace safeloop
