#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "delopt/dda.hpp"
#include "delopt/decentralized.hpp"
#include "delopt/geometry.hpp"
#include "delopt/losses.hpp"
#include "delopt/optimistic.hpp"
#include "delopt/rng.hpp"
#include "delopt/schedule.hpp"
#include "delopt/vec.hpp"

namespace delopt {

enum class AlgorithmKind { kOda, kDda, kDdda, kDoda };

// ---- Scenario: parsed from flat key/value text with [section] headers ----

struct GeometrySpec {
  std::string kind = "ball";  // free | ball | box | simplex
  int dim = 1;
  double radius = 1.0;  // ball
  Vec lower, upper;     // box

  Geometry build() const;
};

struct LossSpec {
  // random_linear | drifting_quadratic | trace | periods | zero_one |
  // repeat_alternating
  std::string kind = "random_linear";
  double G = 1.0;          // declared gradient bound
  double scale = 1.0;      // drifting_quadratic curvature (the Lipschitz modulus)
  double drift = 0.01;     // drifting_quadratic per-round center step
  double center_radius = 0.5;  // drifting_quadratic initial center box
  std::string trace_text;  // trace: gradient rows
  std::string trace_path;  // trace: read rows from this file instead
  int m = 2, len = 3, tau = 1;  // periods / zero_one
  bool preset_len = false;      // zero_one: use the scale-separating length
  int base_len = 64;            // repeat_alternating: alternating base length

  LossSequence build(const GeometrySpec& geometry, int horizon, SplitMix64& rng) const;
};

struct DelaySpec {
  std::string kind = "constant";  // constant | geometric | trace
  int tau = 0;                    // constant
  double p = 0.5;                 // geometric success probability
  int cap = 10;                   // geometric cap
  std::string trace_text;
  std::string trace_path;
  int num_agents = 1;
  std::vector<int> activation;  // active agent per round; empty = agent 1

  Timeline build(int horizon, SplitMix64& rng) const;
};

struct NetworkSpec {
  std::string kind = "uniform";  // uniform | coordinator
  int num_agents = 4;
  int max_active = 2;
  int latency = 1;                  // uniform link latency
  std::vector<int> up, down;        // coordinator: per-agent legs (1-based)

  NetworkTrace build(int horizon, SplitMix64& rng) const;
};

struct RateSpec {
  // single-stream: constant | decreasing | adadelay_o | adadelay_o_plus |
  //                card_decreasing | adadelay_dist
  // network:       fixed | global_card | dist
  // optimistic:    pair | relaxed | adaptive
  std::string kind = "constant";
  double eta = 0.0;
  double eta_tilde = 0.0;
  double R = 1.0;
  double G = 1.0;
  double L = 1.0;
  int tau = 0;
  bool strict_scale = true;  // optimistic pair scale enforcement
  bool defer = false;        // shrink used sets to restore usage orderliness
};

struct ComparatorSpec {
  std::string kind = "hindsight";  // hindsight | point
  Vec point;
  double radius = 1.0;  // hindsight search radius on the free geometry
};

struct Scenario {
  int horizon = 0;
  AlgorithmKind algorithm = AlgorithmKind::kDda;
  std::uint64_t seed = 0;
  GeometrySpec geometry;
  LossSpec losses;
  DelaySpec delays;
  NetworkSpec network;
  RateSpec rate;
  ComparatorSpec comparator;
  std::string guess = "zero";  // doda guess policy
  std::vector<std::string> bound_checks;
  std::string name = "scenario";
};

Scenario parse_scenario_text(const std::string& text, const std::string& name);
Scenario parse_scenario_file(const std::string& path);

// Round-trippable rendering in the scenario grammar.
std::string scenario_to_text(const Scenario& scenario);

// Materializes everything a run would build (geometry, losses, delays or
// network, comparator) without running; throws on any configuration defect.
void validate_scenario(const Scenario& scenario);

// ---- Comparator solving ----

struct ComparatorResult {
  Vec point;
  bool exact = true;
  double gap = 0.0;  // certified suboptimality when not exact
  std::string note;
};

// Best fixed action against the summed losses. Linear losses use the
// closed-form minimizers per geometry; quadratic mixes reduce to one
// Euclidean projection; anything else falls back to projected subgradient
// with a certified gap. free_radius bounds the search on the free geometry
// around x_start.
ComparatorResult hindsight_comparator(const LossSequence& losses, const Geometry& geometry,
                                      double free_radius, const Vec& x_start);

// Euclidean projection onto the probability simplex (sorting method).
Vec project_simplex(const Vec& y);

// ---- Bound registry ----

// Functional ids, each mapping to exactly one right-hand-side formula:
//   time_ordered      h(p)/eta_T + sum eta_t (n^2 + 2 n * missing) / 2
//   reordered         the same shape along the rate-key reordering
//   regime_unavail    2 R G sqrt((1 + 2 O) T)
//   regime_total_delay  2 sqrt(2) R G sqrt(T + 2 D)
//   regime_lag        2 R sqrt(lag)
//   decreasing        2 R G sqrt(T (1 + 2 tau))
//   adadelay_o        2 R sqrt(lag_estimate_T + G^2 (2 tau^2 + 3 tau + 1))
//   adadelay_o_plus   2 R max_t sqrt(lag_estimate_t + G^2 rho_t)
//   adadelay_o_plus_oracle  2 R min(max_t sqrt(lag_t + G^2 rho_t), G sqrt(T + 2 D))
//   card_decreasing   2 R G sqrt((T + tau)(1 + 2 tau))
//   adadelay_dist     2 R max_t sqrt(relayed lag_t + G^2 (2 tau + 1)^2)
//   network_fixed     2 R G N_rms sqrt((2 tau + 1) T)           (collective)
//   network_card      R G sqrt((5t+3)(M N_max + (t+1) N_max^2))
//                       + R G sqrt((5t+3) M N_max)              (collective)
//   network_discrepancy  effective + G * total distance to reference
//   optimistic_gap    ||p - x1||^2/(2 eta_T) + sum eta~ (gap^2 - guess^2)/2
//   optimistic_variation  R sqrt((2 tau + 1) * shifted variation)
//   optimistic_field  ||p - x1||^2/(2 eta_T) + sum eta~ deviation^2
//   optimistic_adaptive  max(sqrt2 R^2 L (4t+1), 2R sqrt((4t+1)(dev+4G^2(3t+1))))
bool known_bound_id(const std::string& id);
const std::vector<std::string>& all_bound_ids();

struct BoundCheck {
  std::string id;
  double measured = 0.0;
  double rhs = 0.0;
  bool satisfied = false;
  double slack = 0.0;  // rhs - measured
};

// satisfied <=> measured <= rhs + max(1e-9 |rhs|, 1e-9).
BoundCheck make_bound_check(const std::string& id, double measured, double rhs);

// ---- Run report ----

struct ReportRow {
  int t = 0;
  int agent = 0;
  double loss = 0.0;
  double inst_regret = 0.0;
  double cum_regret = 0.0;
  double eta = 0.0;
  bool has_eta_tilde = false;
  double eta_tilde = 0.0;
  bool has_lambda_hat = false;
  double lambda_hat = 0.0;
  bool has_rho = false;
  long long rho = 0;
};

struct RunReport {
  std::string scenario_name;
  AlgorithmKind algorithm = AlgorithmKind::kDda;
  std::vector<ReportRow> rows;
  double regret = 0.0;             // actual regret total (effective for networks)
  double linearized_regret = 0.0;  // single-stream runs
  double collective_regret = 0.0;  // networks
  double discrepancy = 0.0;        // networks
  DelayStats stats;
  ComparatorResult comparator;
  std::vector<BoundCheck> bounds;
  bool all_bounds_hold = true;
};

RunReport run_scenario(const Scenario& scenario);

std::string emit_csv(const RunReport& report);
std::string emit_plotdata(const RunReport& report);
std::string emit_summary(const RunReport& report);

// ---- Experiment suites ----

struct SuiteCheck {
  std::string label;
  bool passed = false;
  std::string detail;
};

struct SuiteReport {
  std::string name;
  std::vector<SuiteCheck> checks;
  bool passed = true;
};

// cor2_regimes | optimistic_separation | network_bounds | adaptive_lemma
SuiteReport run_suite(const std::string& name);
const std::vector<std::string>& all_suite_names();

// Random open-network trace with a uniform link latency; every round has
// 1..max_active distinct agents.
NetworkTrace gen_uniform_latency_network(SplitMix64& rng, int horizon, int num_agents,
                                         int max_active, int latency);

// Hub-relayed latency table: latency(a -> b) = up[a] + down[b]; reception
// order is then the same for every consumer.
NetworkTrace gen_coordinator_network(SplitMix64& rng, int horizon, int num_agents,
                                     int max_active, const std::vector<int>& up,
                                     const std::vector<int>& down);

// Fixed-width decimal rendering used by every emitter ("%.12g").
std::string format_double(double v);

}  // namespace delopt
