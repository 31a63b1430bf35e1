#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace delopt {

// Dense coordinate vector. Dimensions stay small (tens at most), so a plain
// contiguous vector beats anything fancier.
using Vec = std::vector<double>;

inline void require_same_dim(const Vec& a, const Vec& b, const char* where) {
  if (a.size() != b.size()) {
    throw std::invalid_argument(std::string(where) + ": dimension mismatch (" +
                                std::to_string(a.size()) + " vs " +
                                std::to_string(b.size()) + ")");
  }
}

inline double dot(const Vec& a, const Vec& b) {
  require_same_dim(a, b, "dot");
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) s += a[k] * b[k];
  return s;
}

inline double l2_norm(const Vec& a) {
  double s = 0.0;
  for (double v : a) s += v * v;
  return std::sqrt(s);
}

inline double l1_norm(const Vec& a) {
  double s = 0.0;
  for (double v : a) s += std::abs(v);
  return s;
}

inline double linf_norm(const Vec& a) {
  double s = 0.0;
  for (double v : a) s = std::max(s, std::abs(v));
  return s;
}

inline Vec zeros(std::size_t dim) { return Vec(dim, 0.0); }

// y += a * x
inline void axpy(double a, const Vec& x, Vec& y) {
  require_same_dim(x, y, "axpy");
  for (std::size_t k = 0; k < x.size(); ++k) y[k] += a * x[k];
}

inline Vec scaled(const Vec& x, double a) {
  Vec y(x);
  for (double& v : y) v *= a;
  return y;
}

inline Vec sub(const Vec& a, const Vec& b) {
  require_same_dim(a, b, "sub");
  Vec y(a);
  for (std::size_t k = 0; k < y.size(); ++k) y[k] -= b[k];
  return y;
}

inline Vec add(const Vec& a, const Vec& b) {
  require_same_dim(a, b, "add");
  Vec y(a);
  for (std::size_t k = 0; k < y.size(); ++k) y[k] += b[k];
  return y;
}

inline bool all_finite(const Vec& a) {
  for (double v : a) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

}  // namespace delopt
