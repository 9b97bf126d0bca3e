#pragma once

#include "safeloop/ellipsoid.hpp"
#include "safeloop/parallel.hpp"
#include "safeloop/sysmodel.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <ostream>
#include <random>
#include <string>
#include <vector>

namespace safeloop {

enum class AttackKind { Zero, ConstantBoundary, RandomBoundary, GreedyWorst };

std::string_view to_string(AttackKind k);
std::optional<AttackKind> attack_kind_from_string(std::string_view s);

/// Generator of admissible attack signals a with a^T Ra a <= 1. Boundary
/// policies always return points with a^T Ra a = 1.
class AttackPolicy {
 public:
  static AttackPolicy zero(const Matrix& Ra);
  static AttackPolicy constant(const Matrix& Ra, const Vector& direction);
  /// A fresh random boundary point every `dwell` seconds.
  static AttackPolicy random(const Matrix& Ra, double dwell, std::uint64_t seed);
  /// Maximizes the growth of z^T P z: a = Ra^-1 g / sqrt(g^T Ra^-1 g), g = B^T P z.
  static AttackPolicy greedy(const Matrix& Ra, const Matrix& P);

  AttackKind kind() const { return kind_; }
  const Matrix& Ra() const { return Ra_; }
  Index dim() const { return Ra_.rows(); }

  /// Rewinds the random stream.
  void reset();
  /// Attack held over [t, t + h) given the state at t.
  Vector operator()(double t, const Vector& state, const Matrix& B);

 private:
  AttackPolicy(AttackKind kind, const Matrix& Ra);
  Vector to_boundary(const Vector& d) const;

  AttackKind kind_;
  Matrix Ra_;
  Matrix Ra_inv_;
  Vector direction_;
  Matrix P_;
  double dwell_ = 1.0;
  std::uint64_t seed_ = 0;
  std::mt19937_64 rng_;
  long segment_ = -1;
  Vector held_;
  Vector pz_, g_;  // greedy scratch
};

struct Trajectory {
  std::vector<double> times;
  std::vector<Vector> states;
  std::vector<Vector> attacks;  // attacks[k] is held over [times[k], times[k+1])
};

/// 0.1 / ||A||_2, or +inf for a zero matrix.
double max_step(const ClosedLoop& cl);
/// min(1e-3, 0.05 / ||A||_2)
double default_step(const ClosedLoop& cl);

/// Classical RK4 with the attack held constant over each step. The step is
/// shortened so that an integer number of steps spans `horizon`.
Trajectory integrate(const ClosedLoop& cl, AttackPolicy& policy, const Vector& x0, double horizon, double dt);

/// Same integration, handing each sample (t, state, attack) to `visit`
/// instead of storing it.
void integrate_visit(const ClosedLoop& cl, AttackPolicy& policy, const Vector& x0, double horizon, double dt,
                     const std::function<void(double, const Vector&, const Vector&)>& visit);

struct SafetyReport {
  double max_safe_level = 0.0;       // max over samples of the safe-set form on the leading states
  double max_invariant_level = 0.0;  // max of z^T P z
  std::optional<double> first_violation;            // safe set left (level > 1 + 1e-9)
  std::optional<double> first_invariant_violation;  // level > 1 + 1e-6
  bool attacks_admissible = true;
};

inline constexpr double kInvariantSlack = 1e-6;

/// `invariant` may act on the full state or on the leading states only.
/// With a nonempty `Ra` every attack sample is also checked for admissibility.
SafetyReport check_safety(const Trajectory& traj, const Ellipsoid& safe, const Matrix& invariant,
                          const Matrix& Ra = Matrix());

void write_csv(std::ostream& os, const Trajectory& traj);

/// A point with z^T P z = level along a random direction.
Vector sample_on_level(const Matrix& P, double level, std::mt19937_64& rng);

struct BatchRun {
  Vector x0;
  AttackPolicy policy;
};

/// Integrates independent runs; results are in input order regardless of
/// the execution mode.
std::vector<Trajectory> simulate_batch(const ClosedLoop& cl, std::vector<BatchRun> runs, double horizon, double dt,
                                       Execution execution = Execution::Parallel);

/// Same, but keeps only the safety report of each run.
std::vector<SafetyReport> check_batch(const ClosedLoop& cl, std::vector<BatchRun> runs, double horizon, double dt,
                                      const Ellipsoid& safe, const Matrix& invariant,
                                      Execution execution = Execution::Parallel);

}  // namespace safeloop
