#pragma once

#include "safeloop/affine.hpp"
#include "safeloop/types.hpp"

#include <optional>
#include <vector>

namespace safeloop {

/// {x : (x - c)^T R (x - c) <= 1} with R symmetric positive semidefinite.
/// A rank-deficient R describes a set that is unbounded along null(R).
class Ellipsoid {
 public:
  Ellipsoid(Matrix shape, Vector center);
  /// Centered at the origin.
  explicit Ellipsoid(Matrix shape);

  static Ellipsoid ball(Index n, double radius);

  const Matrix& shape() const { return shape_; }
  const Vector& center() const { return center_; }
  Index dim() const { return shape_.rows(); }

  bool is_centered() const { return center_.isZero(0.0); }
  /// Quadratic form (x - c)^T R (x - c).
  double level(const Vector& x) const;
  /// Same set with every semi-axis multiplied by `factor`.
  Ellipsoid scaled(double factor) const;

 private:
  Matrix shape_;
  Vector center_;
};

inline constexpr double kMembershipTolerance = 1e-9;

bool membership(const Vector& x, const Ellipsoid& e);

struct Containment {
  bool contained = false;
  std::optional<double> tau;  // S-procedure multiplier when contained
};

/// Exact (lossless S-procedure) test of inner ⊆ outer. `inner` must be
/// centered with a positive-definite shape; `outer` may be off-center with a
/// PSD shape. Solved as a one-variable SDP.
Containment contains(const Ellipsoid& inner, const Ellipsoid& outer);

/// Same test by minimizing lambda_max(M_out - tau M_in) over tau with a
/// golden-section search. Needs no SDP backend.
Containment contains_by_search(const Ellipsoid& inner, const Ellipsoid& outer);

/// M_out - tau * [[Q, 0], [0, -1]]; inner ⊆ outer iff this is NSD for some
/// tau >= 0. Affine in Q for fixed tau, so Q may be a decision variable.
AffineExpr containment_lmi(const AffineExpr& inner_shape, const Ellipsoid& outer, double tau);

/// Upper end of the useful tau range, 1 - c^T R c (tau must stay below it
/// for off-center outer sets, equality allowed when centered).
double containment_scale(const Ellipsoid& outer);

struct Projection {
  Matrix shape;
  /// false when the trailing block was singular and a pseudo-inverse was
  /// used; the shape is then a lower bound on the true projection shape.
  bool exact = true;
};

/// Shape of the projection of {x : x^T P x <= 1} onto the leading k
/// coordinates: the Schur complement P11 - P12 P22^{-1} P21.
Projection project(const Matrix& P, Index k);

/// Projection onto an arbitrary coordinate subset (in the given order).
Projection project_onto(const Matrix& P, const std::vector<Index>& coords);

/// Tr[R]^(n/2) / n^(n/2), an upper bound on det(R)^(1/2).
double trace_volume_bound(const Matrix& R);

/// `count` boundary points of a 2-D ellipsoid at uniformly spaced angles.
std::vector<Vector> boundary_points(const Ellipsoid& e, int count);

}  // namespace safeloop
