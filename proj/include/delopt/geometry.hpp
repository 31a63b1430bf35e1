#pragma once

#include "delopt/vec.hpp"

namespace delopt {

enum class GeometryKind { kEuclideanFree, kEuclideanBall, kEuclideanBox, kEntropicSimplex };

// A feasible set paired with a 1-strongly-convex regularizer and the norm it
// is strongly convex with respect to. The regularizer is shifted so that its
// minimum over the set is exactly zero:
//   free/ball/box : h(x) = ||x||_2^2 / 2          (norm: l2, dual l2)
//   simplex       : h(x) = sum x_k log x_k + log d (norm: l1, dual linf)
// mirror(y) returns argmin_x { <-y, x> + h(x) }, i.e. the projection-like map
// that turns an accumulated dual vector into a primal point.
class Geometry {
 public:
  static Geometry euclidean_free(int dim);
  static Geometry euclidean_ball(double radius, int dim);
  static Geometry euclidean_box(Vec lower, Vec upper);
  static Geometry entropic_simplex(int dim);

  GeometryKind kind() const { return kind_; }
  int dim() const { return dim_; }
  double radius() const { return radius_; }
  const Vec& lower() const { return lower_; }
  const Vec& upper() const { return upper_; }

  // Shifted regularizer value; throws std::domain_error on infeasible input.
  double regularizer(const Vec& x) const;

  // Bregman divergence of the regularizer. The second argument must be a
  // point where the regularizer is differentiable (strictly positive
  // coordinates for the simplex); otherwise throws std::domain_error.
  double bregman(const Vec& x, const Vec& ref) const;

  // Dual-to-primal map; total on all of R^d.
  Vec mirror(const Vec& y) const;

  double primal_norm(const Vec& v) const;
  double dual_norm(const Vec& g) const;

  bool is_feasible(const Vec& x, double tol = kFeasibilityTol) const;
  void require_feasible(const Vec& x, const char* where) const;

  // sup over the feasible set of the shifted regularizer; +inf for the free
  // geometry. Used as an a-priori radius when no comparator is fixed.
  double regularizer_sup() const;

  // mirror(0): the point the algorithms play before any feedback arrives.
  Vec prior_point() const { return mirror(zeros(static_cast<std::size_t>(dim_))); }

  static constexpr double kFeasibilityTol = 1e-9;

 private:
  Geometry(GeometryKind kind, int dim) : kind_(kind), dim_(dim) {}

  GeometryKind kind_;
  int dim_ = 0;
  double radius_ = 0.0;
  Vec lower_, upper_;
};

const char* geometry_kind_name(GeometryKind kind);

}  // namespace delopt
