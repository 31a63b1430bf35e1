#include <doctest.h>

#include <cmath>
#include <stdexcept>

#include "delopt/errors.hpp"
#include "delopt/geometry.hpp"
#include "delopt/losses.hpp"
#include "delopt/rng.hpp"

using namespace delopt;

namespace {

Vec random_point(SplitMix64& rng, int dim, double span) {
  Vec x(static_cast<std::size_t>(dim));
  for (double& v : x) v = span * (2.0 * rng.next_double() - 1.0);
  return x;
}

// Central finite difference of the loss value.
Vec fd_gradient(const Loss& loss, const Vec& x) {
  const double h = 1e-6;
  Vec g(x.size());
  for (std::size_t k = 0; k < x.size(); ++k) {
    Vec lo = x, hi = x;
    lo[k] -= h;
    hi[k] += h;
    g[k] = (loss.value(hi) - loss.value(lo)) / (2.0 * h);
  }
  return g;
}

}  // namespace

TEST_CASE("linear loss closed forms") {
  const Loss l = Loss::linear({1.0, -2.0}, 0.5);
  CHECK(l.value({2.0, 1.0}) == doctest::Approx(0.5));
  CHECK(l.gradient({2.0, 1.0}) == Vec{1.0, -2.0});
  CHECK(l.gradient({-5.0, 3.0}) == Vec{1.0, -2.0});
  CHECK(l.gradient_lipschitz() == 0.0);
}

TEST_CASE("quadratic loss closed forms") {
  const Loss q = Loss::quadratic({1.0, 0.0}, 2.0);
  CHECK(q.value({0.0, 0.0}) == doctest::Approx(1.0));
  CHECK(q.value({1.0, 0.0}) == doctest::Approx(0.0));
  const Vec g = q.gradient({0.0, 0.0});
  CHECK(g[0] == doctest::Approx(-2.0));
  CHECK(g[1] == doctest::Approx(0.0));
  CHECK(q.gradient_lipschitz() == 2.0);
  CHECK_THROWS_AS(Loss::quadratic({1.0}, -1.0), std::invalid_argument);
}

TEST_CASE("gradient norm bounds per geometry") {
  const Loss l = Loss::linear({1.0, -2.0, 2.0});
  CHECK(l.gradient_norm_bound(Geometry::euclidean_ball(1.0, 3)) == doctest::Approx(3.0));
  CHECK(l.gradient_norm_bound(Geometry::entropic_simplex(3)) == doctest::Approx(2.0));

  const Loss q = Loss::quadratic({2.0, 0.0}, 3.0);
  CHECK(std::isinf(q.gradient_norm_bound(Geometry::euclidean_free(2))));
  CHECK(q.gradient_norm_bound(Geometry::euclidean_ball(1.0, 2)) == doctest::Approx(9.0));
}

TEST_CASE("gradients match finite differences") {
  SplitMix64 rng(7);
  for (int k = 0; k < 50; ++k) {
    const Loss lin = Loss::linear(random_point(rng, 3, 2.0), rng.next_double());
    const Loss quad = Loss::quadratic(random_point(rng, 3, 2.0), 0.5 + rng.next_double());
    for (const Loss& loss : {lin, quad}) {
      const Vec x = random_point(rng, 3, 2.0);
      const Vec g = loss.gradient(x);
      const Vec fd = fd_gradient(loss, x);
      for (std::size_t j = 0; j < g.size(); ++j) {
        CHECK(g[j] == doctest::Approx(fd[j]).epsilon(1e-4));
      }
    }
  }
}

TEST_CASE("losses are convex along the gradient") {
  SplitMix64 rng(11);
  for (int k = 0; k < 200; ++k) {
    const Loss loss = (k % 2 == 0)
                          ? Loss::linear(random_point(rng, 2, 3.0), rng.next_double())
                          : Loss::quadratic(random_point(rng, 2, 3.0), 0.1 + rng.next_double());
    const Vec x = random_point(rng, 2, 3.0);
    const Vec y = random_point(rng, 2, 3.0);
    CHECK(loss.value(y) >= loss.value(x) + dot(loss.gradient(x), sub(y, x)) - 1e-9);
  }
}

TEST_CASE("gradient rows round trip") {
  const std::string text = "1 2\n-0.5 0.25 | 1.5\n0 0\n";
  const LossSequence seq = LossSequence::from_gradient_rows(text, 3.0);
  CHECK(seq.horizon() == 3);
  CHECK(seq.dim() == 2);
  CHECK(seq.gradient_bound() == 3.0);
  CHECK(seq.at(1).linear_gradient() == Vec{1.0, 2.0});
  CHECK(seq.at(2).value({0.0, 0.0}) == doctest::Approx(1.5));

  const LossSequence again = LossSequence::from_gradient_rows(seq.to_gradient_rows(), 3.0);
  REQUIRE(again.horizon() == seq.horizon());
  for (int t = 1; t <= seq.horizon(); ++t) {
    CHECK(again.at(t).linear_gradient() == seq.at(t).linear_gradient());
    CHECK(again.at(t).value({0.0, 0.0}) == seq.at(t).value({0.0, 0.0}));
  }
}

TEST_CASE("gradient rows reject malformed input") {
  CHECK_THROWS_AS(LossSequence::from_gradient_rows("1 2\n3\n", 1.0), ValidationError);
  CHECK_THROWS_AS(LossSequence::from_gradient_rows("", 1.0), ValidationError);
  CHECK_THROWS_AS(LossSequence::from_gradient_rows("1 x\n", 1.0), ValidationError);
}

TEST_CASE("sequence indexing is one-based and guarded") {
  const LossSequence seq = LossSequence::from_gradient_rows("1\n2\n", 2.0);
  CHECK(seq.at(1).linear_gradient() == Vec{1.0});
  CHECK(seq.at(2).linear_gradient() == Vec{2.0});
  CHECK_THROWS_AS(seq.at(0), std::out_of_range);
  CHECK_THROWS_AS(seq.at(3), std::out_of_range);
}
