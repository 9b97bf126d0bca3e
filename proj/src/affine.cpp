#include "safeloop/affine.hpp"

#include <algorithm>
#include <limits>

namespace safeloop {

int Variable::size() const {
  return symmetric ? static_cast<int>(rows * (rows + 1) / 2) : static_cast<int>(rows * cols);
}

Matrix Variable::basis(int k) const {
  Matrix b = Matrix::Zero(rows, cols);
  if (!symmetric) {
    b(k % rows, k / rows) = 1.0;
    return b;
  }
  // upper triangle, column major: column j holds rows 0..j
  int j = 0;
  while ((j + 1) * (j + 2) / 2 <= k) ++j;
  const int i = k - j * (j + 1) / 2;
  b(i, j) = 1.0;
  b(j, i) = 1.0;
  return b;
}

Matrix Variable::value(const Vector& x) const {
  Matrix m(rows, cols);
  if (!symmetric) {
    for (Index c = 0; c < cols; ++c)
      for (Index r = 0; r < rows; ++r) m(r, c) = x(offset + static_cast<int>(c * rows + r));
    return m;
  }
  int k = offset;
  for (Index j = 0; j < cols; ++j)
    for (Index i = 0; i <= j; ++i) {
      m(i, j) = x(k);
      m(j, i) = x(k);
      ++k;
    }
  return m;
}

void Variable::scatter(const Matrix& m, Vector& x) const {
  if (m.rows() != rows || m.cols() != cols)
    throw Error(ErrorKind::DimensionMismatch,
                "value for '" + name + "' is " + shape_string(m) + ", expected " +
                    std::to_string(rows) + "x" + std::to_string(cols));
  if (!symmetric) {
    for (Index c = 0; c < cols; ++c)
      for (Index r = 0; r < rows; ++r) x(offset + static_cast<int>(c * rows + r)) = m(r, c);
    return;
  }
  int k = offset;
  for (Index j = 0; j < cols; ++j)
    for (Index i = 0; i <= j; ++i) x(k++) = 0.5 * (m(i, j) + m(j, i));
}

// ---------------------------------------------------------------------------

AffineExpr::AffineExpr(Index rows, Index cols) : constant_(Matrix::Zero(rows, cols)) {}

AffineExpr::AffineExpr(Matrix constant) : constant_(std::move(constant)) {}

AffineExpr AffineExpr::of(const Variable& v) {
  AffineExpr e(v.rows, v.cols);
  for (int k = 0; k < v.size(); ++k) e.terms_.emplace(v.offset + k, v.basis(k));
  return e;
}

AffineExpr AffineExpr::blocks(const std::vector<std::vector<AffineExpr>>& rows) {
  if (rows.empty() || rows.front().empty())
    throw Error(ErrorKind::InvalidArgument, "block expression needs at least one block");
  const std::size_t ncols = rows.front().size();
  std::vector<Index> heights, widths(ncols, 0);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r].size() != ncols)
      throw Error(ErrorKind::DimensionMismatch, "block row " + std::to_string(r) + " has " +
                                                    std::to_string(rows[r].size()) + " blocks, expected " +
                                                    std::to_string(ncols));
    heights.push_back(rows[r].front().rows());
    for (std::size_t c = 0; c < ncols; ++c) {
      const auto& b = rows[r][c];
      if (r == 0) widths[c] = b.cols();
      if (b.rows() != heights[r] || b.cols() != widths[c])
        throw Error(ErrorKind::DimensionMismatch,
                    "block (" + std::to_string(r) + "," + std::to_string(c) + ") is " +
                        shape_string(b.constant()) + ", expected " + std::to_string(heights[r]) + "x" +
                        std::to_string(widths[c]));
    }
  }
  Index total_rows = 0, total_cols = 0;
  for (auto h : heights) total_rows += h;
  for (auto w : widths) total_cols += w;

  AffineExpr out(total_rows, total_cols);
  Index r0 = 0;
  for (std::size_t r = 0; r < rows.size(); ++r) {
    Index c0 = 0;
    for (std::size_t c = 0; c < ncols; ++c) {
      const auto& b = rows[r][c];
      out.constant_.block(r0, c0, b.rows(), b.cols()) = b.constant_;
      for (const auto& [k, coef] : b.terms_) {
        auto it = out.terms_.find(k);
        if (it == out.terms_.end()) it = out.terms_.emplace(k, Matrix::Zero(total_rows, total_cols)).first;
        it->second.block(r0, c0, b.rows(), b.cols()) += coef;
      }
      c0 += widths[c];
    }
    r0 += heights[r];
  }
  return out;
}

void AffineExpr::add_term(int index, const Matrix& coef) {
  require_dims(coef.rows() == rows() && coef.cols() == cols(), "term", coef, "expression", constant_);
  auto it = terms_.find(index);
  if (it == terms_.end())
    terms_.emplace(index, coef);
  else
    it->second += coef;
}

Matrix AffineExpr::evaluate(const Vector& x) const {
  Matrix m = constant_;
  for (const auto& [k, coef] : terms_) m += x(k) * coef;
  return m;
}

AffineExpr AffineExpr::transpose() const {
  AffineExpr t(Matrix(constant_.transpose()));
  for (const auto& [k, coef] : terms_) t.terms_.emplace(k, coef.transpose());
  return t;
}

AffineExpr AffineExpr::trace() const {
  if (rows() != cols()) throw Error(ErrorKind::DimensionMismatch, "trace of non-square expression");
  AffineExpr t = scalar(constant_.trace());
  for (const auto& [k, coef] : terms_) t.terms_.emplace(k, Matrix::Constant(1, 1, coef.trace()));
  return t;
}

double AffineExpr::max_asymmetry() const {
  if (rows() != cols()) return std::numeric_limits<double>::infinity();
  if (constant_.size() == 0) return 0.0;
  double worst = (constant_ - constant_.transpose()).cwiseAbs().maxCoeff();
  for (const auto& [k, coef] : terms_) worst = std::max(worst, (coef - coef.transpose()).cwiseAbs().maxCoeff());
  return worst;
}

AffineExpr& AffineExpr::operator+=(const AffineExpr& rhs) {
  require_dims(rows() == rhs.rows() && cols() == rhs.cols(), "lhs", constant_, "rhs", rhs.constant_);
  constant_ += rhs.constant_;
  for (const auto& [k, coef] : rhs.terms_) {
    auto it = terms_.find(k);
    if (it == terms_.end())
      terms_.emplace(k, coef);
    else
      it->second += coef;
  }
  return *this;
}

AffineExpr& AffineExpr::operator-=(const AffineExpr& rhs) {
  require_dims(rows() == rhs.rows() && cols() == rhs.cols(), "lhs", constant_, "rhs", rhs.constant_);
  constant_ -= rhs.constant_;
  for (const auto& [k, coef] : rhs.terms_) {
    auto it = terms_.find(k);
    if (it == terms_.end())
      terms_.emplace(k, -coef);
    else
      it->second -= coef;
  }
  return *this;
}

AffineExpr& AffineExpr::operator*=(double s) {
  constant_ *= s;
  for (auto& [k, coef] : terms_) coef *= s;
  return *this;
}

AffineExpr operator*(const Matrix& lhs, const AffineExpr& e) {
  require_dims(lhs.cols() == e.rows(), "left factor", lhs, "expression", e.constant_);
  AffineExpr out(Matrix(lhs * e.constant_));
  for (const auto& [k, coef] : e.terms_) out.terms_.emplace(k, lhs * coef);
  return out;
}

AffineExpr operator*(const AffineExpr& e, const Matrix& rhs) {
  require_dims(e.cols() == rhs.rows(), "expression", e.constant_, "right factor", rhs);
  AffineExpr out(Matrix(e.constant_ * rhs));
  for (const auto& [k, coef] : e.terms_) out.terms_.emplace(k, coef * rhs);
  return out;
}

AffineExpr sym(const AffineExpr& e) { return 0.5 * (e + e.transpose()); }

}  // namespace safeloop
