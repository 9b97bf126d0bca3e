#include "safeloop/ellipsoid.hpp"

#include "safeloop/sdp.hpp"

#include <cmath>
#include <numbers>

namespace safeloop {
namespace {

void require_psd_shape(const Matrix& shape, const char* what) {
  if (shape.rows() != shape.cols() || shape.rows() == 0)
    throw Error(ErrorKind::DimensionMismatch, std::string(what) + " shape must be square, got " + shape_string(shape));
  if (!is_symmetric(shape, kSymmetryTolerance * std::max(1.0, shape.cwiseAbs().maxCoeff())))
    throw Error(ErrorKind::NotSymmetric, std::string(what) + " shape is not symmetric");
  if (min_eigenvalue(shape) < -kPsdTolerance)
    throw Error(ErrorKind::NotPositiveDefinite, std::string(what) + " shape is not positive semidefinite");
}

Matrix outer_form(const Ellipsoid& outer) {
  const Index n = outer.dim();
  const Matrix& r = outer.shape();
  const Vector& c = outer.center();
  Matrix m(n + 1, n + 1);
  m.topLeftCorner(n, n) = r;
  m.topRightCorner(n, 1) = -r * c;
  m.bottomLeftCorner(1, n) = -(r * c).transpose();
  m(n, n) = c.dot(r * c) - 1.0;
  return m;
}

Matrix inner_form(const Matrix& q) {
  const Index n = q.rows();
  Matrix m = Matrix::Zero(n + 1, n + 1);
  m.topLeftCorner(n, n) = q;
  m(n, n) = -1.0;
  return m;
}

void check_pair(const Ellipsoid& inner, const Ellipsoid& outer) {
  if (inner.dim() != outer.dim())
    throw Error(ErrorKind::DimensionMismatch, "inner ellipsoid has dimension " + std::to_string(inner.dim()) +
                                                  ", outer has " + std::to_string(outer.dim()));
  if (!inner.is_centered()) throw Error(ErrorKind::InvalidArgument, "inner ellipsoid must be centered at the origin");
  if (!is_pd(inner.shape())) throw Error(ErrorKind::NotPositiveDefinite, "inner ellipsoid shape is not positive definite");
}

}  // namespace

Ellipsoid::Ellipsoid(Matrix shape, Vector center) : shape_(std::move(shape)), center_(std::move(center)) {
  require_psd_shape(shape_, "ellipsoid");
  if (center_.size() != shape_.rows())
    throw Error(ErrorKind::DimensionMismatch, "ellipsoid center has " + std::to_string(center_.size()) +
                                                  " entries, shape is " + shape_string(shape_));
  shape_ = symmetrized(shape_);
}

Ellipsoid::Ellipsoid(Matrix shape) : Ellipsoid(shape, Vector::Zero(shape.rows())) {}

Ellipsoid Ellipsoid::ball(Index n, double radius) {
  if (!(radius > 0.0)) throw Error(ErrorKind::InvalidArgument, "ball radius must be positive");
  return Ellipsoid(Matrix::Identity(n, n) / (radius * radius));
}

double Ellipsoid::level(const Vector& x) const {
  if (x.size() != dim())
    throw Error(ErrorKind::DimensionMismatch, "point has " + std::to_string(x.size()) +
                                                  " entries, ellipsoid dimension is " + std::to_string(dim()));
  const Vector d = x - center_;
  return d.dot(shape_ * d);
}

Ellipsoid Ellipsoid::scaled(double factor) const {
  if (!(factor > 0.0)) throw Error(ErrorKind::InvalidArgument, "scale factor must be positive");
  return Ellipsoid(shape_ / (factor * factor), center_);
}

bool membership(const Vector& x, const Ellipsoid& e) { return e.level(x) <= 1.0 + kMembershipTolerance; }

double containment_scale(const Ellipsoid& outer) {
  return 1.0 - outer.center().dot(outer.shape() * outer.center());
}

AffineExpr containment_lmi(const AffineExpr& inner_shape, const Ellipsoid& outer, double tau) {
  const Index n = outer.dim();
  if (inner_shape.rows() != n || inner_shape.cols() != n)
    throw Error(ErrorKind::DimensionMismatch, "inner shape is " + shape_string(inner_shape.constant()) +
                                                  ", outer ellipsoid dimension is " + std::to_string(n));
  const AffineExpr in = AffineExpr::blocks({{inner_shape, AffineExpr::zero(n, 1)},
                                            {AffineExpr::zero(1, n), AffineExpr::scalar(-1.0)}});
  return AffineExpr(outer_form(outer)) - tau * in;
}

Containment contains(const Ellipsoid& inner, const Ellipsoid& outer) {
  check_pair(inner, outer);
  SdpProblem p;
  const Variable tau = p.add_scalar("tau");
  p.add_psd(AffineExpr::of(tau), "tau >= 0");
  AffineExpr lmi(outer_form(outer));
  lmi.add_term(tau.offset, -inner_form(inner.shape()));
  p.add_nsd(lmi, "S-procedure");
  // Tangent sets sit exactly on the boundary of the feasible tau interval;
  // accept them at the solver's feasibility tolerance.
  SdpOptions options;
  options.infeasibility_margin = kFeasibilityTolerance;
  const SdpSolution s = sdp_solve(p, options);
  if (!s.feasible()) return {};
  return {true, s.scalar("tau")};
}

Containment contains_by_search(const Ellipsoid& inner, const Ellipsoid& outer) {
  check_pair(inner, outer);
  const Matrix mo = outer_form(outer);
  const Matrix mi = inner_form(inner.shape());
  const double hi = containment_scale(outer);
  if (hi < 0.0) return {};  // origin lies outside the outer set
  auto worst = [&](double tau) { return max_eigenvalue(mo - tau * mi); };
  // lambda_max(mo - tau mi) is convex in tau: golden-section search.
  const double g = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = 0.0, b = hi;
  double c = b - g * (b - a), d = a + g * (b - a);
  double fc = worst(c), fd = worst(d);
  for (int it = 0; it < 200 && b - a > 1e-15 * std::max(1.0, hi); ++it) {
    if (fc <= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - g * (b - a);
      fc = worst(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + g * (b - a);
      fd = worst(d);
    }
  }
  double tau = 0.5 * (a + b);
  double best = worst(tau);
  for (double cand : {0.0, hi}) {
    const double v = worst(cand);
    if (v < best) {
      best = v;
      tau = cand;
    }
  }
  const double tol = 1e-9 * std::max({1.0, mo.norm(), tau * mi.norm()});
  if (best > tol) return {};
  return {true, tau};
}

Projection project(const Matrix& P, Index k) {
  if (P.rows() != P.cols()) throw Error(ErrorKind::DimensionMismatch, "project: matrix is " + shape_string(P));
  const Index n = P.rows();
  if (k < 1 || k > n)
    throw Error(ErrorKind::InvalidArgument,
                "project: leading block size " + std::to_string(k) + " outside [1, " + std::to_string(n) + "]");
  if (!is_symmetric(P, kSymmetryTolerance * std::max(1.0, P.cwiseAbs().maxCoeff())))
    throw Error(ErrorKind::NotSymmetric, "project: matrix is not symmetric");
  const Matrix ps = symmetrized(P);
  if (k == n) return {ps, true};

  const Matrix p11 = ps.topLeftCorner(k, k);
  const Matrix p12 = ps.topRightCorner(k, n - k);
  const Matrix p22 = ps.bottomRightCorner(n - k, n - k);
  Eigen::SelfAdjointEigenSolver<Matrix> es(p22);
  const Vector ev = es.eigenvalues();
  const double cutoff = 1e-12 * std::max(1.0, ev.cwiseAbs().maxCoeff());
  Projection out;
  Vector inv = Vector::Zero(ev.size());
  for (Index i = 0; i < ev.size(); ++i) {
    if (std::abs(ev(i)) > cutoff)
      inv(i) = 1.0 / ev(i);
    else
      out.exact = false;
  }
  const Matrix p22_inv = es.eigenvectors() * inv.asDiagonal() * es.eigenvectors().transpose();
  out.shape = symmetrized(p11 - p12 * p22_inv * p12.transpose());
  return out;
}

Projection project_onto(const Matrix& P, const std::vector<Index>& coords) {
  if (P.rows() != P.cols()) throw Error(ErrorKind::DimensionMismatch, "project: matrix is " + shape_string(P));
  const Index n = P.rows();
  std::vector<Index> order;
  std::vector<bool> used(static_cast<std::size_t>(n), false);
  for (Index c : coords) {
    if (c < 0 || c >= n || used[static_cast<std::size_t>(c)])
      throw Error(ErrorKind::InvalidArgument, "project: invalid or repeated coordinate " + std::to_string(c));
    used[static_cast<std::size_t>(c)] = true;
    order.push_back(c);
  }
  for (Index i = 0; i < n; ++i)
    if (!used[static_cast<std::size_t>(i)]) order.push_back(i);
  Matrix permuted(n, n);
  for (Index r = 0; r < n; ++r)
    for (Index c = 0; c < n; ++c) permuted(r, c) = P(order[static_cast<std::size_t>(r)], order[static_cast<std::size_t>(c)]);
  return project(permuted, static_cast<Index>(coords.size()));
}

double trace_volume_bound(const Matrix& R) {
  if (!is_pd(R)) throw Error(ErrorKind::NotPositiveDefinite, "trace_volume_bound: matrix is not positive definite");
  const double n = static_cast<double>(R.rows());
  return std::pow(R.trace() / n, n / 2.0);
}

std::vector<Vector> boundary_points(const Ellipsoid& e, int count) {
  if (e.dim() != 2) throw Error(ErrorKind::DimensionMismatch, "boundary_points needs a 2-D ellipsoid");
  if (count <= 0) throw Error(ErrorKind::InvalidArgument, "boundary_points: count must be positive");
  Eigen::LLT<Matrix> llt(e.shape());
  if (llt.info() != Eigen::Success || !is_pd(e.shape()))
    throw Error(ErrorKind::NotPositiveDefinite, "boundary_points: degenerate ellipsoid shape");
  // R = L L^T, so x = c + L^{-T} u with |u| = 1 lies on the boundary.
  const Matrix lt = llt.matrixU();
  std::vector<Vector> pts;
  pts.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) {
    const double th = 2.0 * std::numbers::pi * i / count;
    Vector u(2);
    u << std::cos(th), std::sin(th);
    pts.push_back(e.center() + lt.triangularView<Eigen::Upper>().solve(u));
  }
  return pts;
}

}  // namespace safeloop
