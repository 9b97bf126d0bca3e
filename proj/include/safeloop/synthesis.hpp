#pragma once

#include "safeloop/analysis.hpp"
#include "safeloop/ellipsoid.hpp"
#include "safeloop/lmi.hpp"
#include "safeloop/parallel.hpp"
#include "safeloop/sdp.hpp"
#include "safeloop/sysmodel.hpp"

#include <optional>
#include <string>
#include <vector>

namespace safeloop {

enum class Objective { Feasibility, MinTraceAttack, MinTraceX };

std::string_view to_string(Objective o);
std::optional<Objective> objective_from_string(std::string_view s);

/// alpha and delta are always fixed; beta is fixed only when the attack
/// shape is a decision variable. `delta` is a fraction of the containment
/// scale of the safe set.
struct SynthesisScalars {
  double alpha = 0.25;
  std::optional<double> beta;
  double delta = 0.99;
};

struct SynthesisOptions {
  /// The controller variables are unbounded cones; a smaller ball keeps the
  /// recovered controller at sane magnitudes.
  SdpOptions sdp = [] {
    SdpOptions o;
    o.radius = 1e4;
    return o;
  }();
  /// P(eta) >= coupling_floor I. Keeps I - XY away from singular.
  double coupling_floor = 1e-3;
  Execution execution = Execution::Parallel;
  /// Above this condition number of I - XY, X is nudged and the rest re-solved.
  double condition_limit = 1e8;
};

struct SynthesisPoint {
  double alpha = 0.0;
  std::optional<double> beta;
  double delta = 0.0;  // absolute value used in J - delta L
  SdpStatus status = SdpStatus::Error;
  Family failed = Family::None;
  std::optional<double> objective;
  std::string message;
};

struct SynthesisResult {
  bool feasible = false;
  std::optional<SynthesisVars> eta;
  Matrix Ra;
  double alpha = 0.0;
  double beta = 0.0;
  double delta = 0.0;
  std::optional<double> objective;
  /// Smallest eigenvalues at the returned point of -(E2 + alpha F + beta S),
  /// P(eta) and -(J - delta L).
  double invariance_margin = 0.0;
  double coupling_margin = 0.0;
  double containment_margin = 0.0;
  double condition = 0.0;  // cond(I - XY)
  bool perturbed = false;
  std::vector<SynthesisPoint> points;
  std::string message;
};

/// One fixed-scalar instance. With `Ra` set the attack bound is fixed and
/// beta is a variable; otherwise `scalars.beta` is required and Tr Ra is
/// minimized.
SynthesisResult synthesize(const HatSystem& hat, const Ellipsoid& safe, const std::optional<Matrix>& Ra,
                           const SynthesisScalars& scalars, Objective objective, const SynthesisOptions& options = {});

/// The SDP that `synthesize` solves first, for inspection or replay.
SdpProblem synthesis_problem(const HatSystem& hat, const Ellipsoid& safe, const std::optional<Matrix>& Ra,
                             const SynthesisScalars& scalars, Objective objective, const SynthesisOptions& options = {});

/// Tries every grid point and keeps the best one (first feasible point for
/// pure feasibility).
SynthesisResult synthesize_grid(const HatSystem& hat, const Ellipsoid& safe, const std::optional<Matrix>& Ra,
                                const ScalarGrid& grid, Objective objective, const SynthesisOptions& options = {});

/// Feasible controller with the smallest Tr X at fixed Ra.
SynthesisResult minimize_invariant_volume(const HatSystem& hat, const Ellipsoid& safe, const Matrix& Ra,
                                          const SynthesisScalars& scalars, const SynthesisOptions& options = {});

struct RecoveryData {
  Matrix M, N;
  Matrix P;  // 2 n1 x 2 n1 Lyapunov matrix of the full loop
  double condition = 0.0;
};

struct Recovery {
  SecondaryController controller;
  RecoveryData data;
};

/// Inverts the change of variables. `M` defaults to the identity.
Recovery recover_controller(const SynthesisVars& eta, const HatSystem& hat, const std::optional<Matrix>& M = {});

/// The change of variables applied to a controller; returns (A, B, C, D) of
/// eta with the given X, Y, M, N.
SynthesisVars forward_change_of_variables(const SecondaryController& sc, const HatSystem& hat, const Matrix& X,
                                          const Matrix& Y, const Matrix& M, const Matrix& N);

struct SynthesisCertificate {
  bool passed = false;
  std::string failed_check;  // empty when passed
  Certificate certificate;   // Q = project(P, n1) on the plant-and-primary states
  Matrix P;
  double p_min_eigenvalue = 0.0;
  double lmi_margin = 0.0;
  std::optional<double> projection_error;  // relative distance to X^-1
};

inline constexpr double kCertificationTolerance = 1e-6;

/// Solver-free checks on the full loop: P > 0; the invariance LMI at P has
/// min eigenvalue >= -1e-6; the projection of P onto the first n1 states
/// matches X^-1 (when X is given) and lies inside the safe set.
SynthesisCertificate certify(const HatSystem& hat, const SecondaryController& sc, const Matrix& Ra,
                             const Ellipsoid& safe, double alpha, double beta, const Matrix& P,
                             const std::optional<Matrix>& X = {});

}  // namespace safeloop
