#include <doctest.h>

#include <cmath>
#include <string>
#include <vector>

#include "delopt/dda.hpp"
#include "delopt/errors.hpp"
#include "delopt/geometry.hpp"
#include "delopt/losses.hpp"
#include "delopt/rng.hpp"
#include "delopt/schedule.hpp"

using namespace delopt;

namespace {

LossSequence unit_scalar_losses(int horizon) {
  std::vector<Loss> ls;
  for (int t = 0; t < horizon; ++t) ls.push_back(Loss::linear({1.0}));
  return LossSequence(std::move(ls), 1.0);
}

LossSequence random_ball_losses(SplitMix64& rng, int horizon, int dim, double G) {
  std::vector<Loss> ls;
  for (int t = 0; t < horizon; ++t) {
    Vec g(static_cast<std::size_t>(dim));
    for (double& v : g) v = 2.0 * rng.next_double() - 1.0;
    const double n = l2_norm(g);
    const double target = G * (0.2 + 0.8 * rng.next_double());
    for (double& v : g) v = n > 0.0 ? v * target / n : target;
    ls.push_back(Loss::linear(std::move(g)));
  }
  return LossSequence(std::move(ls), G);
}

}  // namespace

TEST_CASE("clamped availability-keyed rate on a lossy stream") {
  // Round 1's feedback never arrives, round 2's arrives at round 3.
  Timeline tl(3, 1);
  tl.set_arrival(2, 1, 3);

  StreamRunConfig cfg;
  cfg.rate = RateConfig::adadelay_o_plus(1.0, 1.0);
  const Geometry geom = Geometry::euclidean_ball(1.0, 1);
  const StreamRunResult run = run_single_agent(tl, geom, unit_scalar_losses(3), {0.0}, cfg);

  CHECK(run.rows[0].eta == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(run.rows[1].eta == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(run.rows[2].eta == doctest::Approx(0.37796447300922720).epsilon(1e-12));

  CHECK(run.rows[0].residual == 1);
  CHECK(run.rows[1].residual == 4);
  CHECK(run.rows[2].residual == 6);
  CHECK(run.rows[0].lag_estimate == doctest::Approx(0.0));
  CHECK(run.rows[2].lag_estimate == doctest::Approx(1.0));

  // The incremental residual equals the set-based count round by round.
  for (Time t = 1; t <= 3; ++t) {
    CHECK(run.rows[static_cast<std::size_t>(t - 1)].residual == rho(tl, t));
  }
}

TEST_CASE("undelayed decreasing rate is one over sqrt t") {
  const Timeline tl = build_timeline(DelayModel::constant(0), 5, 1, {}, 0);
  StreamRunConfig cfg;
  cfg.rate = RateConfig::decreasing(1.0, 1.0, 0);
  const StreamRunResult run =
      run_single_agent(tl, Geometry::euclidean_ball(1.0, 1), unit_scalar_losses(5), {0.0}, cfg);
  for (int t = 1; t <= 5; ++t) {
    CHECK(run.rows[static_cast<std::size_t>(t - 1)].eta ==
          doctest::Approx(1.0 / std::sqrt(static_cast<double>(t))).epsilon(1e-12));
  }
}

TEST_CASE("constant-rate trajectory on a unit gradient stream") {
  const Timeline tl = build_timeline(DelayModel::constant(0), 3, 1, {}, 0);
  StreamRunConfig cfg;
  cfg.rate = RateConfig::constant(0.1);
  const Geometry geom = Geometry::euclidean_free(1);
  const StreamRunResult run = run_single_agent(tl, geom, unit_scalar_losses(3), {-0.3}, cfg);

  CHECK(run.points[1][0] == doctest::Approx(0.0));
  CHECK(run.points[2][0] == doctest::Approx(-0.1).epsilon(1e-12));
  CHECK(run.points[3][0] == doctest::Approx(-0.2).epsilon(1e-12));
  CHECK(run.final_prediction[0] == doctest::Approx(-0.3).epsilon(1e-12));

  CHECK(run.ledger.inst_actual[1] == doctest::Approx(0.3).epsilon(1e-12));
  CHECK(run.ledger.inst_actual[3] == doctest::Approx(0.1).epsilon(1e-12));
  CHECK(run.ledger.actual == doctest::Approx(0.6).epsilon(1e-12));
  CHECK(run.ledger.linearized == doctest::Approx(run.ledger.actual).epsilon(1e-12));
  CHECK(run.ledger.cum_actual[3] == doctest::Approx(run.ledger.actual).epsilon(1e-12));
}

TEST_CASE("same-round deliveries fold in origin order") {
  // Rounds 1 and 2 both arrive at round 3; round 1 folds first, so round 2's
  // increment sees one pooled record it never used.
  Timeline tl(3, 1);
  tl.set_arrival(1, 1, 3);
  tl.set_arrival(2, 1, 3);
  StreamRunConfig cfg;
  cfg.rate = RateConfig::adadelay_o(1.0, 1.0, 2);
  const StreamRunResult run =
      run_single_agent(tl, Geometry::euclidean_ball(1.0, 1), unit_scalar_losses(3), {0.0}, cfg);
  CHECK(run.rows[2].lag_estimate == doctest::Approx(4.0));
  CHECK(run.rows[2].eta == doctest::Approx(1.0 / std::sqrt(19.0)).epsilon(1e-12));
}

TEST_CASE("unit-norm lag estimate plus residual recovers the true lag") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const int T = 30;
    const Timeline tl =
        build_timeline(DelayModel::iid_geometric(0.4, 6), T, 1, {}, seed);
    StreamRunConfig cfg;
    cfg.rate = RateConfig::adadelay_o_plus(1.0, 1.0);
    const StreamRunResult run =
        run_single_agent(tl, Geometry::euclidean_ball(1.0, 1), unit_scalar_losses(T), {0.0}, cfg);
    const DelayStats st = delay_stats(tl, std::vector<double>(T + 1, 1.0));
    for (int t = 1; t <= T; ++t) {
      const StepRow& row = run.rows[static_cast<std::size_t>(t - 1)];
      CHECK(row.residual == rho(tl, t));
      CHECK(row.lag_estimate + static_cast<double>(row.residual) ==
            doctest::Approx(st.lag[static_cast<std::size_t>(t)]).epsilon(1e-12));
    }
  }
}

TEST_CASE("regret stays under the time-ordered bound") {
  SplitMix64 loss_rng(2024);
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const int T = 40;
    const Geometry geom = Geometry::euclidean_ball(1.0, 3);
    const LossSequence losses = random_ball_losses(loss_rng, T, 3, 1.0);
    const Timeline tl = build_timeline(DelayModel::iid_geometric(0.4, 6), T, 1, {}, seed);
    const Vec p{0.3, -0.2, 0.1};

    std::vector<RateConfig> rates = {RateConfig::constant(0.05),
                                     RateConfig::decreasing(1.0, 1.0, 6),
                                     RateConfig::adadelay_o(1.0, 1.0, 6)};
    for (const RateConfig& rate : rates) {
      StreamRunConfig cfg;
      cfg.rate = rate;
      const StreamRunResult run = run_single_agent(tl, geom, losses, p, cfg);
      const double rhs = rhs_time_ordered(run);
      CHECK(run.ledger.linearized <= rhs + 1e-9 * std::max(1.0, std::abs(rhs)));
      CHECK(run.ledger.actual <= run.ledger.linearized + 1e-9);
      if (rate.kind == RateKind::kAdaDelayO) {
        // The arrival-order estimate never exceeds the true lag.
        CHECK(run.rows.back().lag_estimate <= run.stats.lag.back() + 1e-9);
      }
    }
  }
}

TEST_CASE("rate-key reordering is faithful and bounds the regret") {
  SplitMix64 loss_rng(77);
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const int T = 40;
    const Geometry geom = Geometry::euclidean_ball(1.0, 2);
    const LossSequence losses = random_ball_losses(loss_rng, T, 2, 1.0);
    const Timeline tl = build_timeline(DelayModel::iid_geometric(0.35, 5), T, 1, {}, seed);
    StreamRunConfig cfg;
    cfg.rate = RateConfig::card_decreasing(1.0, 1.0, 5);
    const StreamRunResult run = run_single_agent(tl, geom, losses, {0.0, 0.0}, cfg);
    const std::vector<Time> order = rate_key_order(run);
    CHECK(is_faithful(order, tl));
    const double rhs = rhs_along_order(run, order);
    CHECK(run.ledger.linearized <= rhs + 1e-9 * std::max(1.0, std::abs(rhs)));
  }
}

TEST_CASE("final prediction ignores arrival order under a fixed rate") {
  SplitMix64 loss_rng(5);
  const int T = 25;
  const LossSequence losses = random_ball_losses(loss_rng, T, 2, 1.0);
  const Geometry geom = Geometry::euclidean_ball(1.0, 2);
  Vec reference;
  for (std::uint64_t seed = 0; seed < 8; ++seed) {
    const Timeline tl = build_timeline(DelayModel::iid_geometric(0.3, 8), T, 1, {}, seed);
    StreamRunConfig cfg;
    cfg.rate = RateConfig::constant(0.07);
    const StreamRunResult run = run_single_agent(tl, geom, losses, {0.0, 0.0}, cfg);
    if (reference.empty()) {
      reference = run.final_prediction;
    } else {
      for (std::size_t k = 0; k < reference.size(); ++k) {
        CHECK(run.final_prediction[k] == doctest::Approx(reference[k]).epsilon(1e-12));
      }
    }
  }
}

TEST_CASE("pool dual sums are arrival-order independent") {
  GradientRecord a;
  a.timestamp = 1;
  a.gradient = {0.1, 0.2};
  a.dual_norm = l2_norm(a.gradient);
  GradientRecord b = a;
  b.timestamp = 2;
  b.gradient = {0.3, -0.1};
  b.dual_norm = l2_norm(b.gradient);
  GradientRecord c = a;
  c.timestamp = 3;
  c.gradient = {-0.2, 0.05};
  c.dual_norm = l2_norm(c.gradient);

  LearnerPool forward, backward;
  forward.insert(a);
  forward.insert(b);
  forward.insert(c);
  backward.insert(c);
  backward.insert(b);
  backward.insert(a);
  CHECK(forward.dual_sum(2) == backward.dual_sum(2));
  CHECK(forward.norm_sum() == backward.norm_sum());
  CHECK_THROWS_AS(forward.insert(a), ProtocolError);
  CHECK_THROWS_AS(forward.record(9), ProtocolError);
}

TEST_CASE("run configuration is guarded") {
  const Timeline tl = build_timeline(DelayModel::constant(1), 4, 1, {}, 0);
  const Geometry geom = Geometry::euclidean_ball(1.0, 1);
  const LossSequence losses = unit_scalar_losses(4);

  StreamRunConfig defer;
  defer.rate = RateConfig::adadelay_o(1.0, 1.0, 1);
  defer.defer_usage = true;
  CHECK_THROWS_AS(run_single_agent(tl, geom, losses, {0.0}, defer), ConfigError);

  Timeline multi(4, 2);
  for (Time s = 1; s <= 4; ++s) {
    multi.set_active(s, 1 + static_cast<int>(s % 2));
    for (int i = 1; i <= 2; ++i) multi.set_arrival(s, i, s + 2);
  }
  StreamRunConfig mono;
  mono.rate = RateConfig::adadelay_o_plus(1.0, 1.0);
  CHECK_THROWS_AS(run_single_agent(multi, geom, losses, {0.0}, mono), ConfigError);

  StreamRunConfig ok;
  ok.rate = RateConfig::constant(0.1);
  CHECK_THROWS_AS(run_single_agent(tl, geom, unit_scalar_losses(2), {0.0}, ok), ConfigError);
  CHECK_THROWS_AS(run_single_agent(tl, geom, losses, {5.0}, ok), std::domain_error);
  CHECK_THROWS_AS(RateConfig::constant(0.0), ConfigError);
  CHECK_THROWS_AS(RateConfig::decreasing(1.0, 1.0, -1), ConfigError);
}

TEST_CASE("metadata is required by estimate-driven rates") {
  LearningRatePolicy policy(RateConfig::adadelay_o(1.0, 1.0, 1));
  GradientRecord rec;
  rec.timestamp = 1;
  rec.gradient = {1.0};
  rec.dual_norm = 1.0;
  rec.has_metadata = false;
  LearnerPool pool;
  CHECK_THROWS_AS(policy.on_receive(rec, pool), ProtocolError);
}

TEST_CASE("prediction map matches the mirror of the scaled dual sum") {
  LearnerPool pool;
  GradientRecord a;
  a.timestamp = 1;
  a.gradient = {1.0, 0.0};
  a.dual_norm = 1.0;
  GradientRecord b = a;
  b.timestamp = 2;
  b.gradient = {0.0, 1.0};
  pool.insert(a);
  pool.insert(b);
  const Geometry geom = Geometry::euclidean_ball(1.0, 2);
  const Vec x = dda_predict(geom, pool, {1, 2}, 0.5);
  CHECK(x[0] == doctest::Approx(-0.5).epsilon(1e-12));
  CHECK(x[1] == doctest::Approx(-0.5).epsilon(1e-12));
  // A subset restriction only sums the named records.
  const Vec y = dda_predict(geom, pool, {2}, 0.5);
  CHECK(y[0] == doctest::Approx(0.0));
  CHECK(y[1] == doctest::Approx(-0.5).epsilon(1e-12));
}
