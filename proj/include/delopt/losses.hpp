#pragma once

#include <string>
#include <vector>

#include "delopt/geometry.hpp"
#include "delopt/vec.hpp"

namespace delopt {

enum class LossKind { kLinear, kQuadratic };

// One round's convex cost. Linear losses may carry a constant offset so that
// table-loaded rows reproduce recorded values exactly; the offset never
// affects gradients or regret differences against a fixed comparator.
class Loss {
 public:
  static Loss linear(Vec gradient, double offset = 0.0);
  static Loss quadratic(Vec center, double scale);

  LossKind kind() const { return kind_; }
  int dim() const { return static_cast<int>(data_.size()); }
  const Vec& linear_gradient() const { return data_; }
  const Vec& center() const { return data_; }
  double scale() const { return scale_; }

  double value(const Vec& x) const;
  Vec gradient(const Vec& x) const;

  // Lipschitz modulus of the gradient map (0 for linear, scale for quadratic).
  double gradient_lipschitz() const { return kind_ == LossKind::kLinear ? 0.0 : scale_; }

  // Upper bound on the dual norm of the gradient over the feasible set;
  // +inf when the set is unbounded and the loss is quadratic.
  double gradient_norm_bound(const Geometry& geometry) const;

 private:
  Loss(LossKind kind, Vec data, double scale) : kind_(kind), data_(std::move(data)), scale_(scale) {}

  LossKind kind_;
  Vec data_;      // gradient (linear) or center (quadratic)
  double scale_;  // offset (linear) or curvature (quadratic)
};

// The gradient map of a loss viewed as full-information feedback, together
// with its declared Lipschitz modulus.
class VectorField {
 public:
  explicit VectorField(Loss loss) : loss_(std::move(loss)) {}

  Vec eval(const Vec& x) const { return loss_.gradient(x); }
  double lipschitz() const { return loss_.gradient_lipschitz(); }
  const Loss& loss() const { return loss_; }

 private:
  Loss loss_;
};

// Per-round losses for a whole run plus the declared gradient-norm bound G.
class LossSequence {
 public:
  LossSequence(std::vector<Loss> losses, double gradient_bound);

  int horizon() const { return static_cast<int>(losses_.size()); }
  int dim() const { return losses_.empty() ? 0 : losses_.front().dim(); }
  // 1-based round index, matching timestamps everywhere else.
  const Loss& at(int t) const;
  double gradient_bound() const { return gradient_bound_; }

  // Rows of gradient components, one row per round (an optional trailing
  // "| offset" column carries the constant term).
  static LossSequence from_gradient_rows(const std::string& text, double gradient_bound);
  std::string to_gradient_rows() const;

 private:
  std::vector<Loss> losses_;
  double gradient_bound_;
};

}  // namespace delopt
