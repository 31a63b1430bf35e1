#include "delopt/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace delopt {

namespace {

void require_dim(int dim) {
  if (dim < 1) throw std::invalid_argument("geometry: dimension must be positive");
}

[[noreturn]] void infeasible(const char* where, GeometryKind kind) {
  throw std::domain_error(std::string(where) + ": point not feasible for " +
                          geometry_kind_name(kind));
}

}  // namespace

const char* geometry_kind_name(GeometryKind kind) {
  switch (kind) {
    case GeometryKind::kEuclideanFree: return "free";
    case GeometryKind::kEuclideanBall: return "ball";
    case GeometryKind::kEuclideanBox: return "box";
    case GeometryKind::kEntropicSimplex: return "simplex";
  }
  return "?";
}

Geometry Geometry::euclidean_free(int dim) {
  require_dim(dim);
  return Geometry(GeometryKind::kEuclideanFree, dim);
}

Geometry Geometry::euclidean_ball(double radius, int dim) {
  require_dim(dim);
  if (!(radius > 0.0) || !std::isfinite(radius)) {
    throw std::invalid_argument("geometry: ball radius must be positive and finite");
  }
  Geometry g(GeometryKind::kEuclideanBall, dim);
  g.radius_ = radius;
  return g;
}

Geometry Geometry::euclidean_box(Vec lower, Vec upper) {
  if (lower.empty() || lower.size() != upper.size()) {
    throw std::invalid_argument("geometry: box bounds must be nonempty and of equal size");
  }
  for (std::size_t k = 0; k < lower.size(); ++k) {
    if (!(lower[k] <= upper[k])) {
      throw std::invalid_argument("geometry: box lower bound exceeds upper bound at coordinate " +
                                  std::to_string(k));
    }
  }
  Geometry g(GeometryKind::kEuclideanBox, static_cast<int>(lower.size()));
  g.lower_ = std::move(lower);
  g.upper_ = std::move(upper);
  return g;
}

Geometry Geometry::entropic_simplex(int dim) {
  require_dim(dim);
  return Geometry(GeometryKind::kEntropicSimplex, dim);
}

bool Geometry::is_feasible(const Vec& x, double tol) const {
  if (static_cast<int>(x.size()) != dim_ || !all_finite(x)) return false;
  switch (kind_) {
    case GeometryKind::kEuclideanFree:
      return true;
    case GeometryKind::kEuclideanBall:
      return l2_norm(x) <= radius_ + tol;
    case GeometryKind::kEuclideanBox:
      for (int k = 0; k < dim_; ++k) {
        if (x[k] < lower_[k] - tol || x[k] > upper_[k] + tol) return false;
      }
      return true;
    case GeometryKind::kEntropicSimplex: {
      double sum = 0.0;
      for (double v : x) {
        if (v < -tol) return false;
        sum += v;
      }
      return std::abs(sum - 1.0) <= tol;
    }
  }
  return false;
}

void Geometry::require_feasible(const Vec& x, const char* where) const {
  if (!is_feasible(x)) infeasible(where, kind_);
}

double Geometry::regularizer(const Vec& x) const {
  require_feasible(x, "regularizer");
  if (kind_ == GeometryKind::kEntropicSimplex) {
    double h = 0.0;
    for (double v : x) {
      if (v > 0.0) h += v * std::log(v);
    }
    // min over the simplex is -log d at the uniform point; shift to zero.
    return h + std::log(static_cast<double>(dim_));
  }
  double s = 0.0;
  for (double v : x) s += v * v;
  return 0.5 * s;
}

double Geometry::bregman(const Vec& x, const Vec& ref) const {
  require_feasible(x, "bregman");
  require_feasible(ref, "bregman");
  if (kind_ == GeometryKind::kEntropicSimplex) {
    for (double v : ref) {
      if (!(v > 0.0)) {
        throw std::domain_error("bregman: reference point must have strictly positive coordinates");
      }
    }
    double d = 0.0;
    for (int k = 0; k < dim_; ++k) {
      if (x[k] > 0.0) d += x[k] * std::log(x[k] / ref[k]);
    }
    return d;
  }
  double s = 0.0;
  for (int k = 0; k < dim_; ++k) {
    const double diff = x[k] - ref[k];
    s += diff * diff;
  }
  return 0.5 * s;
}

Vec Geometry::mirror(const Vec& y) const {
  if (static_cast<int>(y.size()) != dim_) {
    throw std::invalid_argument("mirror: dimension mismatch");
  }
  if (!all_finite(y)) throw std::domain_error("mirror: non-finite dual vector");
  switch (kind_) {
    case GeometryKind::kEuclideanFree:
      return y;
    case GeometryKind::kEuclideanBall: {
      const double n = l2_norm(y);
      if (n <= radius_) return y;
      return scaled(y, radius_ / n);
    }
    case GeometryKind::kEuclideanBox: {
      Vec x(y);
      for (int k = 0; k < dim_; ++k) x[k] = std::clamp(x[k], lower_[k], upper_[k]);
      return x;
    }
    case GeometryKind::kEntropicSimplex: {
      // Max-subtracted softmax; exact overflow-free evaluation.
      const double m = *std::max_element(y.begin(), y.end());
      Vec x(y);
      double z = 0.0;
      for (double& v : x) {
        v = std::exp(v - m);
        z += v;
      }
      for (double& v : x) v /= z;
      return x;
    }
  }
  throw std::logic_error("mirror: unhandled geometry kind");
}

double Geometry::primal_norm(const Vec& v) const {
  return kind_ == GeometryKind::kEntropicSimplex ? l1_norm(v) : l2_norm(v);
}

double Geometry::dual_norm(const Vec& g) const {
  return kind_ == GeometryKind::kEntropicSimplex ? linf_norm(g) : l2_norm(g);
}

double Geometry::regularizer_sup() const {
  switch (kind_) {
    case GeometryKind::kEuclideanFree:
      return std::numeric_limits<double>::infinity();
    case GeometryKind::kEuclideanBall:
      return 0.5 * radius_ * radius_;
    case GeometryKind::kEuclideanBox: {
      double s = 0.0;
      for (int k = 0; k < dim_; ++k) {
        s += std::max(lower_[k] * lower_[k], upper_[k] * upper_[k]);
      }
      return 0.5 * s;
    }
    case GeometryKind::kEntropicSimplex:
      // Attained at the vertices.
      return std::log(static_cast<double>(dim_));
  }
  return 0.0;
}

}  // namespace delopt
