#pragma once

#include "safeloop/types.hpp"

#include <map>
#include <string>
#include <vector>

namespace safeloop {

/// A decision variable registered with an SdpProblem. Symmetric variables
/// own n(n+1)/2 scalar coordinates (upper triangle, column major), general
/// ones rows*cols.
struct Variable {
  std::string name;
  Index rows = 0;
  Index cols = 0;
  bool symmetric = false;
  int offset = 0;

  int size() const;
  /// Coefficient matrix multiplying scalar coordinate `k` (0-based, local).
  Matrix basis(int k) const;
  /// Matrix value of this variable in the stacked coordinate vector `x`.
  Matrix value(const Vector& x) const;
  /// Inverse of value(): writes the coordinates of `m` into `x`.
  void scatter(const Matrix& m, Vector& x) const;
};

/// Matrix-valued affine function of the problem's scalar coordinates:
/// constant + sum_k x_k * term_k.
class AffineExpr {
 public:
  AffineExpr() = default;
  AffineExpr(Index rows, Index cols);
  explicit AffineExpr(Matrix constant);

  static AffineExpr of(const Variable& v);
  static AffineExpr zero(Index rows, Index cols) { return AffineExpr(rows, cols); }
  static AffineExpr identity(Index n) { return AffineExpr(Matrix::Identity(n, n)); }
  static AffineExpr scalar(double v) { return AffineExpr(Matrix::Constant(1, 1, v)); }

  /// Assemble a block matrix. Every block in a block-row must share its row
  /// count and every block-column its column count.
  static AffineExpr blocks(const std::vector<std::vector<AffineExpr>>& rows);

  Index rows() const { return constant_.rows(); }
  Index cols() const { return constant_.cols(); }
  const Matrix& constant() const { return constant_; }
  const std::map<int, Matrix>& terms() const { return terms_; }
  bool is_constant() const { return terms_.empty(); }

  /// Adds x_index * coef. Used when replaying serialized problems.
  void add_term(int index, const Matrix& coef);

  Matrix evaluate(const Vector& x) const;
  AffineExpr transpose() const;
  AffineExpr trace() const;
  /// Largest entrywise asymmetry over the constant and every coefficient.
  double max_asymmetry() const;

  AffineExpr& operator+=(const AffineExpr& rhs);
  AffineExpr& operator-=(const AffineExpr& rhs);
  AffineExpr& operator*=(double s);

  friend AffineExpr operator+(AffineExpr lhs, const AffineExpr& rhs) { return lhs += rhs; }
  friend AffineExpr operator-(AffineExpr lhs, const AffineExpr& rhs) { return lhs -= rhs; }
  friend AffineExpr operator-(AffineExpr e) { return e *= -1.0; }
  friend AffineExpr operator*(double s, AffineExpr e) { return e *= s; }
  friend AffineExpr operator*(AffineExpr e, double s) { return e *= s; }
  friend AffineExpr operator*(const Matrix& lhs, const AffineExpr& e);
  friend AffineExpr operator*(const AffineExpr& e, const Matrix& rhs);

 private:
  Matrix constant_;
  std::map<int, Matrix> terms_;
};

/// (e + e^T) / 2
AffineExpr sym(const AffineExpr& e);

}  // namespace safeloop
