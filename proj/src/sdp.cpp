#include "safeloop/sdp.hpp"

#include <algorithm>
#include <exception>
#include <limits>

namespace safeloop {

Variable SdpProblem::add(std::string name, Index rows, Index cols, bool symmetric) {
  if (rows <= 0 || cols <= 0)
    throw Error(ErrorKind::InvalidArgument, "variable '" + name + "' must have positive dimensions");
  for (const auto& v : variables_)
    if (v.name == name) throw Error(ErrorKind::InvalidArgument, "duplicate variable name '" + name + "'");
  Variable v{std::move(name), rows, cols, symmetric, num_scalars_};
  num_scalars_ += v.size();
  variables_.push_back(v);
  return v;
}

Variable SdpProblem::add_symmetric(std::string name, Index n) { return add(std::move(name), n, n, true); }

Variable SdpProblem::add_matrix(std::string name, Index rows, Index cols) {
  return add(std::move(name), rows, cols, false);
}

Variable SdpProblem::add_scalar(std::string name) { return add(std::move(name), 1, 1, false); }

void SdpProblem::add_psd(AffineExpr expr, std::string label) {
  if (expr.rows() != expr.cols() || expr.rows() == 0)
    throw Error(ErrorKind::DimensionMismatch,
                "constraint '" + label + "' is " + shape_string(expr.constant()) + ", expected square");
  if (expr.max_asymmetry() > kSymmetryTolerance)
    throw Error(ErrorKind::NotSymmetric, "constraint '" + label + "' is not symmetric");
  for (const auto& [k, coef] : expr.terms())
    if (k >= num_scalars_)
      throw Error(ErrorKind::InvalidArgument, "constraint '" + label + "' references an undeclared variable");
  constraints_.push_back({std::move(label), std::move(expr)});
}

void SdpProblem::minimize(AffineExpr objective) {
  if (objective.rows() != 1 || objective.cols() != 1)
    throw Error(ErrorKind::DimensionMismatch, "objective must be scalar");
  objective_ = std::move(objective);
  maximizing_ = false;
}

void SdpProblem::maximize(AffineExpr objective) {
  minimize(std::move(objective));
  maximizing_ = true;
}

const Variable& SdpProblem::variable(std::string_view name) const {
  for (const auto& v : variables_)
    if (v.name == name) return v;
  throw Error(ErrorKind::InvalidArgument, "unknown variable '" + std::string(name) + "'");
}

std::string_view to_string(SdpStatus s) {
  switch (s) {
    case SdpStatus::Feasible: return "feasible";
    case SdpStatus::Infeasible: return "infeasible";
    case SdpStatus::Inaccurate: return "inaccurate";
    case SdpStatus::Error: return "error";
  }
  return "error";
}

const Matrix& SdpSolution::value(const std::string& name) const {
  auto it = assignment.find(name);
  if (it == assignment.end()) throw Error(ErrorKind::InvalidArgument, "no value for '" + name + "'");
  return it->second;
}

void fill_constraint_report(const SdpProblem& problem, const Vector& x, SdpSolution& out) {
  out.x = x;
  out.assignment.clear();
  for (const auto& v : problem.variables()) out.assignment[v.name] = v.value(x);
  out.constraint_min_eigenvalues.clear();
  out.min_eigenvalue = std::numeric_limits<double>::infinity();
  for (const auto& c : problem.constraints()) {
    const double e = min_eigenvalue(c.expr.evaluate(x));
    out.constraint_min_eigenvalues.push_back(e);
    out.min_eigenvalue = std::min(out.min_eigenvalue, e);
  }
  if (problem.constraints().empty()) out.min_eigenvalue = 0.0;
  if (problem.objective()) out.objective_value = problem.objective()->evaluate(x)(0, 0);
}

SdpSolution sdp_solve(const SdpProblem& problem, const SdpBackend& backend) {
  try {
    return backend.solve(problem);
  } catch (const std::exception& e) {
    SdpSolution s;
    s.status = SdpStatus::Error;
    s.message = std::string(backend.name()) + ": " + e.what();
    return s;
  }
}

SdpSolution sdp_solve(const SdpProblem& problem, const SdpOptions& options) {
  return sdp_solve(problem, BarrierBackend(options));
}

}  // namespace safeloop
