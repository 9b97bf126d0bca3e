#pragma once

#include "safeloop/affine.hpp"

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace safeloop {

struct PsdConstraint {
  std::string label;
  AffineExpr expr;  // required to be positive semidefinite
};

/// Backend-agnostic semidefinite program: matrix variables, affine PSD
/// constraints and an optional linear objective.
class SdpProblem {
 public:
  Variable add_symmetric(std::string name, Index n);
  Variable add_matrix(std::string name, Index rows, Index cols);
  Variable add_scalar(std::string name);

  /// expr >= 0. The expression must be square and symmetric.
  void add_psd(AffineExpr expr, std::string label);
  /// expr <= 0.
  void add_nsd(const AffineExpr& expr, std::string label) { add_psd(-expr, std::move(label)); }

  void minimize(AffineExpr objective);
  void maximize(AffineExpr objective);

  const std::vector<Variable>& variables() const { return variables_; }
  const std::vector<PsdConstraint>& constraints() const { return constraints_; }
  const std::optional<AffineExpr>& objective() const { return objective_; }
  bool maximizing() const { return maximizing_; }
  int num_scalars() const { return num_scalars_; }
  const Variable& variable(std::string_view name) const;

 private:
  Variable add(std::string name, Index rows, Index cols, bool symmetric);

  std::vector<Variable> variables_;
  std::vector<PsdConstraint> constraints_;
  std::optional<AffineExpr> objective_;
  bool maximizing_ = false;
  int num_scalars_ = 0;
};

enum class SdpStatus { Feasible, Infeasible, Inaccurate, Error };

std::string_view to_string(SdpStatus s);

struct SdpSolution {
  SdpStatus status = SdpStatus::Error;
  std::map<std::string, Matrix> assignment;
  std::optional<double> objective_value;
  /// Most negative eigenvalue over all constraints at the returned point
  /// (positive when the point is strictly interior).
  double min_eigenvalue = 0.0;
  std::vector<double> constraint_min_eigenvalues;
  Vector x;
  int newton_steps = 0;
  std::string message;

  bool feasible() const { return status == SdpStatus::Feasible; }
  const Matrix& value(const std::string& name) const;
  double scalar(const std::string& name) const { return value(name)(0, 0); }
};

inline constexpr double kFeasibilityTolerance = 1e-7;

struct SdpOptions {
  /// Decision coordinates are confined to the Euclidean ball of this radius.
  double radius = 1e6;
  /// Stop when the barrier duality gap bound is below
  /// gap_tolerance * max(1, |objective|).
  double gap_tolerance = 1e-9;
  /// Phase I declares a problem infeasible when no point reaches a
  /// normalized constraint margin better than -infeasibility_margin.
  double infeasibility_margin = 1e-9;
  /// Phase I hands over to phase II once every normalized constraint has
  /// at least this margin.
  double interior_margin = 1e-8;
  int max_newton_steps = 5000;
};

class SdpBackend {
 public:
  virtual ~SdpBackend() = default;
  virtual std::string name() const = 0;
  virtual SdpSolution solve(const SdpProblem& problem) const = 0;
};

/// Dense primal log-barrier path-following method with a phase-I
/// feasibility stage. Returned points are interior whenever the problem is
/// strictly feasible.
class BarrierBackend final : public SdpBackend {
 public:
  explicit BarrierBackend(SdpOptions options = {}) : options_(options) {}
  std::string name() const override { return "barrier"; }
  SdpSolution solve(const SdpProblem& problem) const override;

 private:
  SdpOptions options_;
};

/// Solves with the default backend. Never throws: failures come back as
/// status Error with a message.
SdpSolution sdp_solve(const SdpProblem& problem, const SdpOptions& options = {});
SdpSolution sdp_solve(const SdpProblem& problem, const SdpBackend& backend);

/// Evaluates every constraint at `x` and fills the eigenvalue diagnostics.
void fill_constraint_report(const SdpProblem& problem, const Vector& x, SdpSolution& out);

}  // namespace safeloop
