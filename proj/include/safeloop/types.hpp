#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>

namespace safeloop {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

enum class ErrorKind {
  DimensionMismatch,
  NotSymmetric,
  NotPositiveDefinite,
  Singular,
  InvalidArgument,
  StepTooLarge,
};

/// Raised for contract violations (bad shapes, non-definite inputs, ...).
/// Infeasibility is never reported through exceptions; it is a result.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

inline constexpr double kSymmetryTolerance = 1e-12;
inline constexpr double kPsdTolerance = 1e-9;

inline Matrix symmetrized(const Matrix& m) { return 0.5 * (m + m.transpose()); }

std::string shape_string(const Matrix& m);

/// Throws DimensionMismatch naming both operands when `ok` is false.
void require_dims(bool ok, const std::string& lhs, const Matrix& a, const std::string& rhs,
                  const Matrix& b);

bool is_symmetric(const Matrix& m, double tol = kSymmetryTolerance);

/// Smallest eigenvalue of the symmetric part of `m`.
double min_eigenvalue(const Matrix& m);

double max_eigenvalue(const Matrix& m);

bool is_psd(const Matrix& m, double tol = kPsdTolerance);

/// Positive definite: Cholesky of the symmetric part succeeds and the
/// smallest eigenvalue is strictly positive.
bool is_pd(const Matrix& m);

double relative_error(const Matrix& value, const Matrix& reference);

}  // namespace safeloop
