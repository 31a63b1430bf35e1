#include "delopt/losses.hpp"

#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "delopt/errors.hpp"

namespace delopt {

Loss Loss::linear(Vec gradient, double offset) {
  if (gradient.empty() || !all_finite(gradient) || !std::isfinite(offset)) {
    throw std::invalid_argument("loss: linear gradient must be nonempty and finite");
  }
  return Loss(LossKind::kLinear, std::move(gradient), offset);
}

Loss Loss::quadratic(Vec center, double scale) {
  if (center.empty() || !all_finite(center)) {
    throw std::invalid_argument("loss: quadratic center must be nonempty and finite");
  }
  if (!(scale > 0.0) || !std::isfinite(scale)) {
    throw std::invalid_argument("loss: quadratic scale must be positive and finite");
  }
  return Loss(LossKind::kQuadratic, std::move(center), scale);
}

double Loss::value(const Vec& x) const {
  require_same_dim(x, data_, "loss value");
  if (kind_ == LossKind::kLinear) return dot(data_, x) + scale_;
  double s = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    const double d = x[k] - data_[k];
    s += d * d;
  }
  return 0.5 * scale_ * s;
}

Vec Loss::gradient(const Vec& x) const {
  require_same_dim(x, data_, "loss gradient");
  if (kind_ == LossKind::kLinear) return data_;
  Vec g = sub(x, data_);
  for (double& v : g) v *= scale_;
  return g;
}

double Loss::gradient_norm_bound(const Geometry& geometry) const {
  if (kind_ == LossKind::kLinear) return geometry.dual_norm(data_);
  switch (geometry.kind()) {
    case GeometryKind::kEuclideanFree:
      return std::numeric_limits<double>::infinity();
    case GeometryKind::kEuclideanBall:
      return scale_ * (geometry.radius() + l2_norm(data_));
    case GeometryKind::kEuclideanBox: {
      double s = 0.0;
      for (int k = 0; k < geometry.dim(); ++k) {
        const double lo = std::abs(geometry.lower()[k] - data_[k]);
        const double hi = std::abs(geometry.upper()[k] - data_[k]);
        const double d = std::max(lo, hi);
        s += d * d;
      }
      return scale_ * std::sqrt(s);
    }
    case GeometryKind::kEntropicSimplex: {
      double m = 0.0;
      for (double c : data_) m = std::max(m, std::abs(c) + 1.0);
      return scale_ * m;
    }
  }
  return std::numeric_limits<double>::infinity();
}

LossSequence::LossSequence(std::vector<Loss> losses, double gradient_bound)
    : losses_(std::move(losses)), gradient_bound_(gradient_bound) {
  if (losses_.empty()) throw std::invalid_argument("loss sequence: must be nonempty");
  if (!(gradient_bound > 0.0)) {
    throw std::invalid_argument("loss sequence: gradient bound must be positive");
  }
  const int d = losses_.front().dim();
  for (const Loss& l : losses_) {
    if (l.dim() != d) throw std::invalid_argument("loss sequence: mixed dimensions");
  }
}

const Loss& LossSequence::at(int t) const {
  if (t < 1 || t > horizon()) {
    throw std::out_of_range("loss sequence: round " + std::to_string(t) + " out of range");
  }
  return losses_[static_cast<std::size_t>(t - 1)];
}

LossSequence LossSequence::from_gradient_rows(const std::string& text, double gradient_bound) {
  std::vector<Loss> losses;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  std::size_t dim = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream row(line);
    Vec g;
    double v;
    std::string tok;
    double offset = 0.0;
    bool in_offset = false;
    while (row >> tok) {
      if (tok == "|") {
        in_offset = true;
        continue;
      }
      try {
        v = std::stod(tok);
      } catch (const std::exception&) {
        throw ValidationError("loss rows: line " + std::to_string(lineno) +
                              ": not a number: '" + tok + "'");
      }
      if (in_offset) {
        offset = v;
      } else {
        g.push_back(v);
      }
    }
    if (g.empty()) continue;  // blank or comment-only line
    if (dim == 0) dim = g.size();
    if (g.size() != dim) {
      throw ValidationError("loss rows: line " + std::to_string(lineno) +
                            ": expected " + std::to_string(dim) + " components, got " +
                            std::to_string(g.size()));
    }
    losses.push_back(Loss::linear(std::move(g), offset));
  }
  if (losses.empty()) throw ValidationError("loss rows: no rows found");
  return LossSequence(std::move(losses), gradient_bound);
}

std::string LossSequence::to_gradient_rows() const {
  std::string out;
  char buf[64];
  for (const Loss& l : losses_) {
    if (l.kind() != LossKind::kLinear) {
      throw ValidationError("loss rows: only linear losses are exportable as rows");
    }
    const Vec& g = l.linear_gradient();
    for (std::size_t k = 0; k < g.size(); ++k) {
      std::snprintf(buf, sizeof(buf), "%.17g", g[k]);
      if (k) out += ' ';
      out += buf;
    }
    if (l.scale() != 0.0) {
      std::snprintf(buf, sizeof(buf), " | %.17g", l.scale());
      out += buf;
    }
    out += '\n';
  }
  return out;
}

}  // namespace delopt
