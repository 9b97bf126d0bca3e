#include "safeloop/types.hpp"

#include <algorithm>
#include <sstream>

namespace safeloop {

std::string shape_string(const Matrix& m) {
  std::ostringstream os;
  os << m.rows() << "x" << m.cols();
  return os.str();
}

void require_dims(bool ok, const std::string& lhs, const Matrix& a, const std::string& rhs,
                  const Matrix& b) {
  if (ok) return;
  throw Error(ErrorKind::DimensionMismatch, "dimension mismatch: " + lhs + " is " + shape_string(a) +
                                                " but " + rhs + " is " + shape_string(b));
}

bool is_symmetric(const Matrix& m, double tol) {
  if (m.rows() != m.cols()) return false;
  if (m.size() == 0) return true;
  return (m - m.transpose()).cwiseAbs().maxCoeff() <= tol;
}

double min_eigenvalue(const Matrix& m) {
  if (m.size() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrized(m), Eigen::EigenvaluesOnly);
  return es.eigenvalues()(0);
}

double max_eigenvalue(const Matrix& m) {
  if (m.size() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrized(m), Eigen::EigenvaluesOnly);
  return es.eigenvalues()(es.eigenvalues().size() - 1);
}

bool is_psd(const Matrix& m, double tol) { return m.rows() == m.cols() && min_eigenvalue(m) >= -tol; }

bool is_pd(const Matrix& m) {
  if (m.rows() != m.cols() || m.size() == 0) return false;
  Eigen::LLT<Matrix> llt(symmetrized(m));
  return llt.info() == Eigen::Success && min_eigenvalue(m) > 0.0;
}

double relative_error(const Matrix& value, const Matrix& reference) {
  const double denom = std::max(1e-300, reference.norm());
  return (value - reference).norm() / denom;
}

}  // namespace safeloop
