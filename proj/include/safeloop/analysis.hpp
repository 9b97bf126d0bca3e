#pragma once

#include "safeloop/ellipsoid.hpp"
#include "safeloop/parallel.hpp"
#include "safeloop/sdp.hpp"
#include "safeloop/sysmodel.hpp"

#include <optional>
#include <string>
#include <vector>

namespace safeloop {

/// Fixed values tried for the scalars that would otherwise make the
/// problems bilinear. `deltas` are fractions of the containment scale
/// 1 - c^T R c of the safe set.
struct ScalarGrid {
  std::vector<double> alphas;
  std::vector<double> betas;
  std::vector<double> deltas;

  /// 2^-6 ... 2^4, 16 log-spaced points.
  static std::vector<double> log_spaced();
  static ScalarGrid defaults();
  void validate() const;
};

inline constexpr double kDefiniteFloor = 1e-8;

struct Certificate {
  Matrix Q;  // invariant set {z : z^T Q z <= 1} on the certified coordinates
  double alpha = 0.0;
  double beta = 0.0;
  std::optional<double> delta;  // containment scalar actually used
  bool contained = false;
  std::optional<double> tau;  // multiplier from an independent containment check
  std::optional<double> objective;
  std::optional<Matrix> Ra;  // attack shape, when it was a decision variable
  double lmi_margin = 0.0;   // min eigenvalue of the invariance LMI at these values
};

/// Which constraints could not be met at a grid point.
enum class Family { None, Invariance, Containment, Skipped };

std::string_view to_string(Family f);

struct GridPointReport {
  double alpha = 0.0;
  std::optional<double> beta;
  std::optional<double> delta;
  SdpStatus status = SdpStatus::Error;
  Family failed = Family::None;
  std::optional<double> objective;
  std::string message;
};

enum class Verdict { Certified, ContainmentFails, InvarianceInfeasible };

std::string_view to_string(Verdict v);

struct AnalysisResult {
  Verdict verdict = Verdict::InvarianceInfeasible;
  std::optional<Certificate> certificate;
  std::vector<GridPointReport> points;
  std::string message;

  bool certified() const { return verdict == Verdict::Certified; }
};

struct AnalysisOptions {
  Execution execution = Execution::Parallel;
  SdpOptions sdp;
};

/// Safety with the primary controller alone: for each alpha and delta,
/// maximize Tr Q over Q >= floor, beta >= 0 subject to the invariance LMI
/// and containment in `safe`. Reports the best point by Tr Q.
AnalysisResult verify_safety(const ClosedLoop& cl, const Matrix& Ra, const Ellipsoid& safe, const ScalarGrid& grid,
                             const AnalysisOptions& options = {});

/// As verify_safety without containment. The verdict is Certified when some
/// invariant ellipsoid exists; the certificate's `contained` is false.
AnalysisResult find_invariant_unconstrained(const ClosedLoop& cl, const Matrix& Ra, const ScalarGrid& grid,
                                            const AnalysisOptions& options = {});

/// Smallest-trace attack shape that the loop tolerates: minimize Tr Ra over
/// (alpha, beta, delta) grid points. The certificate carries Ra.
AnalysisResult assess_worst_attack(const ClosedLoop& cl, const Ellipsoid& safe, const ScalarGrid& grid,
                                   const AnalysisOptions& options = {});

/// Smallest eigenvalue of -E1 - alpha F - beta S at fixed values.
double invariance_margin(const Matrix& A, const Matrix& B, const Matrix& Q, const Matrix& Ra, double alpha,
                         double beta);

/// Solver-free re-check of a certificate against the loop it claims to
/// certify: Q > 0, invariance margin >= -tol, and (if claimed) containment.
bool recheck(const Certificate& cert, const ClosedLoop& cl, const Matrix& Ra, const std::optional<Ellipsoid>& safe,
             double tol = kFeasibilityTolerance);

}  // namespace safeloop
