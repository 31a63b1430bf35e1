// Acceptance gate: one check per release criterion, each printing a single
// [PASS]/[FAIL] line. Exit status 0 only when every criterion holds.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "delopt/dda.hpp"
#include "delopt/errors.hpp"
#include "delopt/geometry.hpp"
#include "delopt/harness.hpp"
#include "delopt/losses.hpp"
#include "delopt/optimistic.hpp"
#include "delopt/rng.hpp"
#include "delopt/schedule.hpp"
#include "delopt/vec.hpp"

using namespace delopt;

namespace {

int g_failures = 0;

void report(int criterion, bool ok, const std::string& detail) {
  std::printf("[%s] criterion %d%s%s\n", ok ? "PASS" : "FAIL", criterion,
              detail.empty() ? "" : " -- ", detail.c_str());
  std::fflush(stdout);
  if (!ok) ++g_failures;
}

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.4g", v);
  return buf;
}

// measured <= rhs up to the registry's relative tolerance.
bool within(double measured, double rhs, double rel = 1e-9) {
  return measured <= rhs + std::max(rel * std::abs(rhs), rel);
}

LossSequence random_ball_losses(int horizon, int dim, double G, SplitMix64& rng) {
  GeometrySpec gs;
  gs.kind = "ball";
  gs.dim = dim;
  gs.radius = 1.0;
  LossSpec ls;
  ls.kind = "random_linear";
  ls.G = G;
  return ls.build(gs, horizon, rng);
}

// ---- 1: measured-data bound on the random ball grid, constant + decreasing ----

void criterion_1() {
  const auto start = std::chrono::steady_clock::now();
  const int T = 200;
  const Geometry geometry = Geometry::euclidean_ball(1.0, 3);
  int checked = 0;
  std::string bad;
  for (std::uint64_t seed = 0; seed < 100 && bad.empty(); ++seed) {
    SplitMix64 rng(0xC1000 + seed);
    const LossSequence losses = random_ball_losses(T, 3, 1.0, rng);
    const Timeline timeline =
        build_timeline(DelayModel::iid_geometric(0.5, 10), T, 1, {}, 0xD1000 + seed);
    const Vec comparator =
        hindsight_comparator(losses, geometry, 1.0, geometry.prior_point()).point;
    const std::vector<double> unit_norms(static_cast<std::size_t>(T) + 1, 1.0);
    const int tau = delay_stats(timeline, unit_norms).max_delay;
    const RateConfig rates[] = {RateConfig::constant(0.05),
                                RateConfig::decreasing(1.0, 1.0, tau)};
    for (const RateConfig& rate : rates) {
      StreamRunConfig cfg;
      cfg.rate = rate;
      const StreamRunResult run = run_single_agent(timeline, geometry, losses, comparator, cfg);
      const double rhs = rhs_time_ordered(run);
      if (!within(run.ledger.linearized, rhs) ||
          !within(run.ledger.actual, run.ledger.linearized)) {
        bad = "seed " + std::to_string(seed) + ": regret " + fmt(run.ledger.linearized) +
              " vs bound " + fmt(rhs);
        break;
      }
      ++checked;
    }
  }
  const double elapsed = seconds_since(start);
  const bool ok = bad.empty() && checked == 200 && elapsed < 5.0;
  report(1, ok,
         bad.empty() ? std::to_string(checked) + " runs within the measured bound in " +
                           fmt(elapsed) + " s"
                     : bad);
}

// ---- 2: the three post-hoc constant-rate regimes on the same grid ----

void criterion_2() {
  int checked = 0;
  std::string bad;
  for (std::uint64_t seed = 0; seed < 100 && bad.empty(); ++seed) {
    Scenario sc;
    sc.horizon = 200;
    sc.seed = seed;
    sc.geometry.kind = "ball";
    sc.geometry.dim = 4;
    sc.geometry.radius = 1.0;
    sc.losses.kind = "random_linear";
    sc.losses.G = 1.0;
    sc.delays.kind = "geometric";
    sc.delays.p = 0.35;
    sc.delays.cap = 10;
    const Geometry geometry = sc.geometry.build();
    SplitMix64 root(sc.seed);
    SplitMix64 loss_rng = root.split();
    SplitMix64 delay_rng = root.split();
    const LossSequence losses = sc.losses.build(sc.geometry, sc.horizon, loss_rng);
    const Timeline timeline = sc.delays.build(sc.horizon, delay_rng);
    std::vector<double> norms(static_cast<std::size_t>(sc.horizon) + 1, 0.0);
    for (int t = 1; t <= sc.horizon; ++t) {
      norms[static_cast<std::size_t>(t)] = geometry.dual_norm(losses.at(t).linear_gradient());
    }
    const DelayStats stats = delay_stats(timeline, norms);
    const double T = static_cast<double>(sc.horizon);
    const double O = static_cast<double>(stats.max_unavailability);
    const double D = static_cast<double>(stats.cumulative_unavailability.back());
    const double lag = stats.lag.back();
    const Vec comparator =
        hindsight_comparator(losses, geometry, 1.0, geometry.prior_point()).point;

    struct Regime {
      const char* name;
      double eta;
      double rhs;
    };
    const Regime regimes[] = {
        {"unavailability", 1.0 / std::sqrt((1.0 + 2.0 * O) * T),
         2.0 * std::sqrt((1.0 + 2.0 * O) * T)},
        {"total-delay", 1.0 / std::sqrt(T + 2.0 * D),
         2.0 * std::sqrt(2.0) * std::sqrt(T + 2.0 * D)},
        {"lag", 1.0 / std::sqrt(lag), 2.0 * std::sqrt(lag)},
    };
    for (const Regime& regime : regimes) {
      StreamRunConfig cfg;
      cfg.rate = RateConfig::constant(regime.eta);
      const StreamRunResult run = run_single_agent(timeline, geometry, losses, comparator, cfg);
      if (!within(run.ledger.linearized, regime.rhs)) {
        bad = "seed " + std::to_string(seed) + " " + regime.name + ": regret " +
              fmt(run.ledger.linearized) + " vs " + fmt(regime.rhs);
        break;
      }
      ++checked;
    }
  }
  report(2, bad.empty() && checked == 300,
         bad.empty() ? "300 post-hoc regime bounds hold" : bad);
}

// ---- 3: both availability-keyed bounds plus the integer slack cap ----

void criterion_3() {
  const int T = 60;
  const Geometry geometry = Geometry::euclidean_ball(1.0, 3);
  int checked = 0;
  std::string bad;
  for (int k = 0; k < 100 && bad.empty(); ++k) {
    Timeline timeline(T, 1);
    const bool lost_case = (k == 99);
    if (lost_case) {
      for (Time s = 1; s <= T; ++s) timeline.set_arrival(s, 1, s + 1);
      timeline.set_arrival(7, 1, kNeverArrives);
    } else {
      timeline = build_timeline(DelayModel::iid_geometric(0.4, 6), T, 1, {},
                                0xA3000 + static_cast<std::uint64_t>(k));
    }
    SplitMix64 rng(0xB3000 + static_cast<std::uint64_t>(k));
    const LossSequence losses = random_ball_losses(T, 3, 1.0, rng);
    const Vec comparator =
        hindsight_comparator(losses, geometry, 1.0, geometry.prior_point()).point;
    StreamRunConfig cfg;
    cfg.rate = RateConfig::adadelay_o_plus(1.0, 1.0);
    const StreamRunResult run = run_single_agent(timeline, geometry, losses, comparator, cfg);

    double min_eta = run.rows.front().eta;
    for (const StepRow& row : run.rows) min_eta = std::min(min_eta, row.eta);
    const double rhs_plus = 2.0 / min_eta;

    std::vector<double> norms(static_cast<std::size_t>(T) + 1, 0.0);
    for (int t = 1; t <= T; ++t) {
      norms[static_cast<std::size_t>(t)] = run.produced[static_cast<std::size_t>(t)].dual_norm;
    }
    const DelayStats avail = delay_stats(timeline, norms);
    double worst = 0.0;
    for (int t = 1; t <= T; ++t) {
      const double rho_t = static_cast<double>(run.rows[static_cast<std::size_t>(t - 1)].residual);
      worst = std::max(worst, std::sqrt(avail.lag[static_cast<std::size_t>(t)] + rho_t));
    }
    const double D = static_cast<double>(avail.cumulative_unavailability.back());
    const double rhs_oracle = 2.0 * std::min(worst, std::sqrt(static_cast<double>(T) + 2.0 * D));

    if (!within(run.ledger.linearized, rhs_plus) ||
        !within(run.ledger.linearized, rhs_oracle)) {
      bad = "case " + std::to_string(k) + ": regret " + fmt(run.ledger.linearized) + " vs " +
            fmt(rhs_plus) + " / " + fmt(rhs_oracle);
      break;
    }
    if (!lost_case) {
      const long long tau = avail.max_delay;
      const long long cap = 2 * tau * tau + 3 * tau + 1;
      for (Time t = 1; t <= T; ++t) {
        if (rho(timeline, t) > cap) {
          bad = "case " + std::to_string(k) + ": slack " + std::to_string(rho(timeline, t)) +
                " above cap " + std::to_string(cap) + " at round " + std::to_string(t);
          break;
        }
      }
    }
    ++checked;
  }
  report(3, bad.empty() && checked == 100,
         bad.empty() ? "100 availability-keyed runs, both bounds and the slack cap hold" : bad);
}

// ---- 4: incremental backlog sets against the mutual-unavailability oracle ----

using PairSet = std::set<std::pair<Time, Time>>;

PairSet normalized(const PairSet& in) {
  PairSet out;
  for (const auto& pr : in) {
    out.insert({std::min(pr.first, pr.second), std::max(pr.first, pr.second)});
  }
  return out;
}

PairSet brute_backlog(const Timeline& timeline, Time t) {
  const std::vector<Time> avail = timeline.available_set(t);
  PairSet out;
  for (std::size_t i = 0; i < avail.size(); ++i) {
    for (std::size_t j = i + 1; j < avail.size(); ++j) {
      const Time s = avail[i];
      const Time r = avail[j];
      if (!timeline.is_available(s, 1, r) && !timeline.is_available(r, 1, s)) {
        out.insert({s, r});
      }
    }
  }
  return out;
}

void criterion_4() {
  const auto start = std::chrono::steady_clock::now();
  long long instances = 0;
  long long mismatches = 0;
  std::string bad;

  const Geometry line = Geometry::euclidean_free(1);
  std::vector<Loss> unit;
  for (int i = 0; i < 8; ++i) unit.push_back(Loss::linear(Vec{1.0}));

  for (int T = 1; T <= 8; ++T) {
    std::vector<Time> arrival(static_cast<std::size_t>(T) + 1, 0);
    // Per round the arrival is one of s+1..T or never: T! patterns in total.
    std::vector<int> choice(static_cast<std::size_t>(T) + 1, 0);
    Time s = 1;
    choice[1] = 0;
    while (s >= 1) {
      const int options = T - static_cast<int>(s) + 1;  // arrivals s+1..T, then never
      if (choice[static_cast<std::size_t>(s)] >= options) {
        --s;
        if (s >= 1) ++choice[static_cast<std::size_t>(s)];
        continue;
      }
      const int c = choice[static_cast<std::size_t>(s)];
      arrival[static_cast<std::size_t>(s)] = (c < options - 1) ? s + 1 + c : kNeverArrives;
      if (s < T) {
        ++s;
        choice[static_cast<std::size_t>(s)] = 0;
        continue;
      }

      ++instances;
      Timeline timeline(T, 1);
      for (Time q = 1; q <= T; ++q) timeline.set_arrival(q, 1, arrival[static_cast<std::size_t>(q)]);
      for (Time t = 1; t <= T; ++t) {
        const PairSet oracle = brute_backlog(timeline, t);
        const PairSet single = normalized(backlog_pairs(timeline, t, BacklogVariant::kSingleStream));
        const PairSet dist = normalized(backlog_pairs(timeline, t, BacklogVariant::kDistributed));
        if (single != oracle || dist != oracle) {
          ++mismatches;
          if (bad.empty()) {
            bad = "T=" + std::to_string(T) + " t=" + std::to_string(t) + " instance " +
                  std::to_string(instances);
          }
        }
      }
      if (T == 6 && bad.empty()) {
        // Cross-check the maintained residual against the from-scratch slack.
        const LossSequence losses(std::vector<Loss>(unit.begin(), unit.begin() + T), 1.0);
        StreamRunConfig cfg;
        cfg.rate = RateConfig::adadelay_o_plus(1.0, 1.0);
        const StreamRunResult run =
            run_single_agent(timeline, line, losses, Vec{0.0}, cfg);
        for (Time t = 1; t <= T; ++t) {
          if (run.rows[static_cast<std::size_t>(t - 1)].residual != rho(timeline, t)) {
            ++mismatches;
            bad = "residual mismatch at T=6 t=" + std::to_string(t);
            break;
          }
        }
      }
      ++choice[static_cast<std::size_t>(s)];
    }
  }
  const double elapsed = seconds_since(start);
  const bool ok = instances == 46233 && mismatches == 0 && elapsed < 30.0;
  report(4, ok,
         bad.empty() ? std::to_string(instances) + " delay patterns, both variants match in " +
                           fmt(elapsed) + " s"
                     : bad + " (" + std::to_string(mismatches) + " mismatches)");
}

// ---- 5: the post-horizon prediction ignores arrival order ----

void criterion_5() {
  const int T = 100;
  const Geometry geometry = Geometry::euclidean_ball(1.0, 3);
  std::string bad;
  for (std::uint64_t stream = 0; stream < 50 && bad.empty(); ++stream) {
    SplitMix64 rng(0xC5000 + stream);
    const LossSequence losses = random_ball_losses(T, 3, 1.0, rng);
    const Vec comparator =
        hindsight_comparator(losses, geometry, 1.0, geometry.prior_point()).point;
    Vec reference;
    for (int pattern = 0; pattern < 20; ++pattern) {
      SplitMix64 arrival_rng(0xE5000 + stream * 131 + static_cast<std::uint64_t>(pattern));
      Timeline timeline(T, 1);
      for (Time s = 1; s <= T; ++s) {
        timeline.set_arrival(s, 1, s + 1 + static_cast<Time>(arrival_rng.next_below(26)));
      }
      StreamRunConfig cfg;
      cfg.rate = RateConfig::constant(0.07);
      const StreamRunResult run = run_single_agent(timeline, geometry, losses, comparator, cfg);
      if (pattern == 0) {
        reference = run.final_prediction;
        continue;
      }
      for (std::size_t i = 0; i < reference.size(); ++i) {
        if (std::abs(run.final_prediction[i] - reference[i]) > 1e-12) {
          bad = "stream " + std::to_string(stream) + " pattern " + std::to_string(pattern) +
                ": coordinate " + std::to_string(i) + " differs by " +
                fmt(std::abs(run.final_prediction[i] - reference[i]));
          break;
        }
      }
      if (!bad.empty()) break;
    }
  }
  report(5, bad.empty(), bad.empty() ? "50 streams x 20 arrival orders agree to 1e-12" : bad);
}

// ---- 6: the three open-network bounds on the uniform-latency grid ----

void criterion_6() {
  int checked = 0;
  std::string bad;
  for (std::uint64_t seed = 0; seed < 50 && bad.empty(); ++seed) {
    Scenario sc;
    sc.horizon = 100;
    sc.algorithm = AlgorithmKind::kDdda;
    sc.seed = seed;
    sc.geometry.kind = "ball";
    sc.geometry.dim = 3;
    sc.geometry.radius = 1.0;
    sc.losses.kind = "random_linear";
    sc.losses.G = 1.0;
    sc.network.kind = "uniform";
    sc.network.num_agents = 6;
    sc.network.max_active = 4;
    sc.network.latency = static_cast<int>(seed % 6);
    sc.rate.R = 1.0;
    sc.rate.G = 1.0;
    sc.rate.tau = sc.network.latency;
    sc.name = "acceptance-net-" + std::to_string(seed);

    Scenario fixed = sc;
    fixed.rate.kind = "fixed";
    fixed.bound_checks = {"network_fixed", "network_discrepancy"};
    const RunReport rf = run_scenario(fixed);

    Scenario card = sc;
    card.rate.kind = "global_card";
    card.bound_checks = {"network_card"};
    const RunReport rc = run_scenario(card);

    const BoundCheck* checks[] = {&rf.bounds[0], &rf.bounds[1], &rc.bounds[0]};
    for (const BoundCheck* bc : checks) {
      if (!bc->satisfied) {
        bad = "seed " + std::to_string(seed) + " " + bc->id + ": " + fmt(bc->measured) + " vs " +
              fmt(bc->rhs);
        break;
      }
      ++checked;
    }
  }
  report(6, bad.empty() && checked == 150,
         bad.empty() ? "150 network bounds hold on the uniform-latency grid" : bad);
}

// ---- 7: matched two-rate runs against the shifted-variation bound ----

void criterion_7() {
  int checked = 0;
  std::string bad;
  for (int tau = 1; tau <= 2 && bad.empty(); ++tau) {
    for (int m = 2; m <= 8; ++m) {
      if (m <= tau) continue;  // generator precondition
      const int len = 3 * (tau + 1) * (tau + 1);
      const LossSequence seq = gen_lb_seq_periods(m, len, tau);
      const double v = variation(seq, tau + 1);
      const double v_exact = static_cast<double>((8 * m + 1) * (tau + 1));
      if (v != v_exact) {
        bad = "m=" + std::to_string(m) + " tau=" + std::to_string(tau) +
              ": shifted variation " + fmt(v) + " != " + fmt(v_exact);
        break;
      }
      Scenario sc;
      sc.algorithm = AlgorithmKind::kDoda;
      sc.geometry.kind = "free";
      sc.geometry.dim = 1;
      sc.losses.kind = "periods";
      sc.losses.m = m;
      sc.losses.len = len;
      sc.losses.tau = tau;
      sc.delays.kind = "constant";
      sc.delays.tau = tau;
      sc.guess = "last";
      sc.rate.kind = "pair";
      sc.rate.R = 1.0;
      sc.rate.tau = tau;
      sc.comparator.radius = 1.0;
      sc.bound_checks = {"optimistic_variation"};
      sc.name = "acceptance-periods-m" + std::to_string(m) + "-tau" + std::to_string(tau);
      const RunReport rep = run_scenario(sc);
      const BoundCheck& bc = rep.bounds.front();
      const double rhs_formula = std::sqrt((2.0 * tau + 1.0) * v_exact);
      if (!bc.satisfied || std::abs(bc.rhs - rhs_formula) > 1e-12 * rhs_formula) {
        bad = sc.name + ": regret " + fmt(bc.measured) + " vs " + fmt(bc.rhs);
        break;
      }
      ++checked;
    }
  }
  report(7, bad.empty() && checked == 13,
         bad.empty() ? "13 variation bounds hold with exact variation values" : bad);
}

// ---- 8: one rate cannot track both adversarial sequences; two rates can ----

void criterion_8() {
  const int tau = 1;
  std::string bad;
  std::string sums;
  for (const int m : {3, 5, 9}) {
    const int len = lb_preset_len(m, tau);
    const double v_bar = static_cast<double>((8 * m + 1) * (tau + 1));
    const double eta = 1.0 / std::sqrt((2.0 * tau + 1.0) * v_bar);
    const int T = 2 * m * len + tau + 1;

    auto scenario_for = [&](const char* kind) {
      Scenario sc;
      sc.algorithm = AlgorithmKind::kDoda;
      sc.geometry.kind = "free";
      sc.geometry.dim = 1;
      sc.losses.kind = kind;
      sc.losses.m = m;
      sc.losses.len = len;
      sc.losses.tau = tau;
      sc.delays.kind = "constant";
      sc.delays.tau = tau;
      sc.guess = "last";
      sc.rate.kind = "pair";
      sc.rate.R = 1.0;
      sc.rate.tau = tau;
      sc.name = "acceptance-paired-m" + std::to_string(m) + "-" + kind;
      return sc;
    };

    Scenario one_periods = scenario_for("periods");
    one_periods.rate.eta = eta;
    one_periods.rate.eta_tilde = eta;
    one_periods.rate.strict_scale = false;
    one_periods.comparator.kind = "point";
    one_periods.comparator.point = {0.0};
    Scenario one_zero = scenario_for("zero_one");
    one_zero.rate.eta = eta;
    one_zero.rate.eta_tilde = eta;
    one_zero.rate.strict_scale = false;
    one_zero.comparator.kind = "point";
    one_zero.comparator.point = {-1.0};

    const double r1 = run_scenario(one_periods).regret;
    const double r2 = run_scenario(one_zero).regret;
    const double threshold = std::max(v_bar, std::sqrt(static_cast<double>(T))) / 2.0;
    if (!(r1 + r2 >= threshold - 1e-9)) {
      bad = "m=" + std::to_string(m) + ": single-rate sum " + fmt(r1 + r2) +
            " under threshold " + fmt(threshold);
      break;
    }
    if (!sums.empty()) sums += ", ";
    sums += "m" + std::to_string(m) + ": " + fmt(r1 + r2) + " >= " + fmt(threshold);

    for (const char* kind : {"periods", "zero_one"}) {
      Scenario dual = scenario_for(kind);
      dual.comparator.radius = 1.0;
      dual.bound_checks = {"optimistic_variation"};
      const RunReport rep = run_scenario(dual);
      if (!rep.bounds.front().satisfied) {
        bad = "m=" + std::to_string(m) + " two-rate on " + kind + ": " +
              fmt(rep.bounds.front().measured) + " vs " + fmt(rep.bounds.front().rhs);
        break;
      }
    }
    if (!bad.empty()) break;
  }
  report(8, bad.empty(), bad.empty() ? "separation holds (" + sums + ")" : bad);
}

// ---- 9: the stretched alternating stream forces delay-scaled regret ----

void criterion_9() {
  std::string bad;
  std::string detail;
  for (const int tau : {1, 3}) {
    Scenario sc;
    sc.horizon = 64 * (tau + 1);
    sc.algorithm = AlgorithmKind::kDoda;
    sc.geometry.kind = "free";
    sc.geometry.dim = 1;
    sc.losses.kind = "repeat_alternating";
    sc.losses.base_len = 64;
    sc.losses.tau = tau;
    sc.delays.kind = "constant";
    sc.delays.tau = tau;
    sc.guess = "last";
    sc.rate.kind = "pair";
    sc.rate.R = 1.0;
    sc.rate.tau = tau;
    sc.comparator.radius = 1.0;
    sc.name = "acceptance-repeat-tau" + std::to_string(tau);
    const RunReport rep = run_scenario(sc);
    const double v_bar = 253.0 * (tau + 1);
    const double floor = 0.1 * std::sqrt(tau * v_bar);
    const double ratio = rep.regret / std::sqrt(tau * v_bar);
    if (!(rep.regret >= floor)) {
      bad = "tau=" + std::to_string(tau) + ": regret " + fmt(rep.regret) + " under floor " +
            fmt(floor);
      break;
    }
    if (!detail.empty()) detail += ", ";
    detail += "tau " + std::to_string(tau) + ": regret/sqrt(tau*variation) = " + fmt(ratio);
  }
  report(9, bad.empty(), bad.empty() ? detail : bad);
}

// ---- 10: mirror-map properties and the inverse-square-root-sum lemma ----

void criterion_10() {
  SplitMix64 rng(0xF10);
  const Geometry geoms[] = {
      Geometry::euclidean_free(3),
      Geometry::euclidean_ball(1.5, 3),
      Geometry::euclidean_box(Vec{-1.0, 0.0, -0.5}, Vec{1.0, 2.0, 0.5}),
      Geometry::entropic_simplex(3),
  };
  const Vec box_lower{-1.0, 0.0, -0.5};
  const Vec box_upper{1.0, 2.0, 0.5};

  auto random_dual = [&](int dim) {
    Vec y(static_cast<std::size_t>(dim));
    for (double& v : y) v = 6.0 * rng.next_double() - 3.0;
    return y;
  };
  auto random_feasible = [&](std::size_t which) {
    Vec x(3);
    switch (which) {
      case 0:
        for (double& v : x) v = 4.0 * rng.next_double() - 2.0;
        break;
      case 1: {
        for (double& v : x) v = 3.0 * rng.next_double() - 1.5;
        const double n = l2_norm(x);
        if (n > 1.5) {
          const double s = 1.5 * rng.next_double() / n;
          for (double& v : x) v *= s;
        }
        break;
      }
      case 2:
        for (std::size_t i = 0; i < 3; ++i) {
          x[i] = box_lower[i] + (box_upper[i] - box_lower[i]) * rng.next_double();
        }
        break;
      default: {
        double total = 0.0;
        for (double& v : x) {
          v = -std::log(1.0 - rng.next_double()) + 1e-3;
          total += v;
        }
        for (double& v : x) v /= total;
        break;
      }
    }
    return x;
  };

  int violations = 0;
  std::string bad;
  for (int k = 0; k < 1000; ++k) {
    const std::size_t which = rng.next_below(4);
    const Geometry& g = geoms[which];
    const Vec y = random_dual(3);
    const Vec y2 = random_dual(3);
    if (g.primal_norm(sub(g.mirror(y), g.mirror(y2))) > g.dual_norm(sub(y, y2)) + 1e-9) {
      ++violations;
      if (bad.empty()) bad = "mirror step expanded on geometry " + std::to_string(which);
    }
  }
  for (int k = 0; k < 1000; ++k) {
    const std::size_t which = rng.next_below(4);
    const Geometry& g = geoms[which];
    const Vec x = random_feasible(which);
    const Vec ref = random_feasible(which);
    const double dist = g.primal_norm(sub(x, ref));
    if (g.bregman(x, ref) < 0.5 * dist * dist - 1e-9) {
      ++violations;
      if (bad.empty()) bad = "divergence under half the squared distance on geometry " +
                             std::to_string(which);
    }
  }
  for (int k = 0; k < 1000; ++k) {
    const int n = 1 + static_cast<int>(rng.next_below(40));
    double lhs = 0.0;
    double total = 0.0;
    for (int i = 0; i < n; ++i) {
      const double a = rng.next_double() < 0.1 ? 0.0 : 2.0 * rng.next_double();
      total += a;
      if (a > 0.0) lhs += a / std::sqrt(total);
    }
    if (lhs > 2.0 * std::sqrt(total) + 1e-9) {
      ++violations;
      if (bad.empty()) bad = "inverse-square-root-sum case " + std::to_string(k);
    }
  }
  report(10, violations == 0,
         violations == 0 ? "3000 property cases, zero violations"
                         : bad + " (" + std::to_string(violations) + " violations)");
}

// ---- 11: adaptive two-rate runs under drifting quadratic fields ----

void criterion_11() {
  const double R = 1.0;
  const double G = 2.0;
  const double L = 0.5;
  const int T = 60;
  int checked = 0;
  std::string bad;

  GeometrySpec gs;
  gs.kind = "free";
  gs.dim = 2;
  const Geometry geometry = gs.build();

  LossSpec ls;
  ls.kind = "drifting_quadratic";
  ls.G = G;
  ls.scale = L;
  ls.drift = 0.01;
  ls.center_radius = 0.5;

  auto run_field = [&](int tau, std::uint64_t seed, int agents, GuessKind guess) {
    SplitMix64 rng(seed);
    const LossSequence losses = ls.build(gs, T, rng);
    std::vector<int> activation;
    if (agents == 2) {
      activation.resize(static_cast<std::size_t>(T));
      for (int t = 0; t < T; ++t) activation[static_cast<std::size_t>(t)] = 1 + (t % 2);
    }
    const Timeline timeline =
        build_timeline(DelayModel::constant(tau), T, agents, activation, seed + 1);
    const Vec comparator =
        hindsight_comparator(losses, geometry, 1.0, zeros(2)).point;
    OptimisticRunConfig cfg;
    cfg.rate = OptimisticRateConfig::adaptive(R, G, L, tau);
    cfg.guess = guess;
    cfg.tau = tau;
    const OptimisticRunResult res = run_optimistic(timeline, geometry, losses, comparator, cfg);

    const double lead = 4.0 * tau + 1.0;
    const double rhs = std::max(std::sqrt(2.0) * R * R * L * lead,
                                2.0 * R * std::sqrt(lead * (res.deviation_total +
                                                            4.0 * G * G * (3.0 * tau + 1.0))));
    if (res.max_grad_norm > G + 1e-12) {
      bad = "tau=" + std::to_string(tau) + " seed=" + std::to_string(seed) +
            ": gradient norm " + fmt(res.max_grad_norm) + " above the declared bound";
      return;
    }
    if (!within(res.ledger.actual, rhs, 1e-6)) {
      bad = "tau=" + std::to_string(tau) + " seed=" + std::to_string(seed) + ": regret " +
            fmt(res.ledger.actual) + " vs " + fmt(rhs);
      return;
    }
    ++checked;
  };

  for (int tau = 0; tau <= 3 && bad.empty(); ++tau) {
    for (std::uint64_t s = 0; s < 3 && bad.empty(); ++s) {
      run_field(tau, 0xB1100 + static_cast<std::uint64_t>(tau) * 16 + s, 1,
                GuessKind::kFieldGlobal);
    }
  }
  for (int tau = 0; tau <= 3 && bad.empty(); ++tau) {
    for (std::uint64_t s = 0; s < 2 && bad.empty(); ++s) {
      run_field(tau, 0xB2200 + static_cast<std::uint64_t>(tau) * 16 + s, 2,
                GuessKind::kFieldLocal);
    }
  }
  report(11, bad.empty() && checked == 20,
         bad.empty() ? "20 drifting-field runs inside the adaptive bound" : bad);
}

}  // namespace

int main() {
  try {
    criterion_1();
    criterion_2();
    criterion_3();
    criterion_4();
    criterion_5();
    criterion_6();
    criterion_7();
    criterion_8();
    criterion_9();
    criterion_10();
    criterion_11();
  } catch (const std::exception& e) {
    std::printf("[FAIL] unexpected error: %s\n", e.what());
    return 1;
  }
  if (g_failures == 0) {
    std::printf("all %d criteria hold\n", 11);
    return 0;
  }
  std::printf("%d criteria failed\n", g_failures);
  return 1;
}
