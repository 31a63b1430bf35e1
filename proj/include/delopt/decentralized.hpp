#pragma once

#include <string>
#include <vector>

#include "delopt/dda.hpp"
#include "delopt/geometry.hpp"
#include "delopt/losses.hpp"
#include "delopt/schedule.hpp"
#include "delopt/vec.hpp"

namespace delopt {

// Latency entry for a link with no delivery.
constexpr int kNeverDelivered = -1;

// Who is active in each round of an open network, and how long feedback
// takes to travel between agents. Positions inside a round are meaningful:
// simultaneous predictions are serialized by position when rounds are
// flattened to a single stream.
struct NetworkTrace {
  int horizon = 0;
  int num_agents = 0;
  std::vector<std::vector<int>> active;  // [t] -> agent ids, 1-based rounds
  // latency[producer][consumer] in rounds; 0 = available next round;
  // kNeverDelivered = the link never delivers.
  std::vector<std::vector<int>> latency;

  void validate() const;
  int total_plays() const;   // M
  int max_active() const;    // N_max
  double rms_active() const; // sqrt(mean of N_t^2)

  // Flattened stream index of (round t, position p), 1-based; and inverses.
  int flat_index(int t, int position) const;
  int round_of_flat(int mu) const;
  int position_of_flat(int mu) const;

  static NetworkTrace parse(const std::string& active_rows, const std::string& latency_rows,
                            int num_agents);
  std::string active_to_rows() const;
  std::string latency_to_rows() const;
};

// The flattened single-stream view: one timeline round per (round, position)
// pair, arrival expressed in flattened indices.
Timeline flatten_to_timeline(const NetworkTrace& trace);

// Slot-level delay measures (in rounds of the network clock, not flattened
// indices): the largest age of a missing feedback at any prediction, plus
// the lost-feedback convention (max delay T-1 when a needed link never
// delivers).
struct NetworkDelayStats {
  int max_delay = 0;
  bool lost_feedback = false;
};

NetworkDelayStats network_delay_stats(const NetworkTrace& trace);

// Fixed network rate: R / (G * rms_active * sqrt((2 tau + 1) T)).
double lr_global_fixed(double R, double G, double rms_active, int tau, int horizon);

// Availability-keyed network rate:
// R / (G * sqrt((5 tau + 3) * (avail_count + (tau + 1) * max_active) * max_active)).
double lr_global_card(double R, double G, int tau, int max_active, int avail_count);

enum class NetworkRateKind { kFixed, kGlobalCard, kDist };

struct NetworkRateConfig {
  NetworkRateKind kind = NetworkRateKind::kFixed;
  double eta = 0.0;  // kFixed
  double R = 1.0;
  double G = 1.0;
  int tau = 0;  // kGlobalCard / kDist

  static NetworkRateConfig fixed(double eta);
  static NetworkRateConfig global_card(double R, double G, int tau);
  static NetworkRateConfig dist(double R, double G, int tau);
};

struct NetworkRegret {
  double effective = 0.0;    // every agent plays its own point
  double collective = 0.0;   // the reference agent's point is charged for all
  double discrepancy = 0.0;  // G * sum of distances to the reference point
};

struct NetworkStepRow {
  int flat = 0;  // flattened index
  int round = 0;
  int position = 0;
  int agent = 0;
  double eta = 0.0;
  int used_count = 0;
  double loss_value = 0.0;
  double grad_norm = 0.0;
  double lag_estimate = 0.0;
};

struct NetworkRunConfig {
  NetworkRateConfig rate;
  int reference_position = 1;
  bool defer_usage = false;
};

struct NetworkRunResult {
  std::vector<std::vector<Vec>> plays;  // [t][position-1]
  std::vector<NetworkStepRow> rows;     // flattened order
  NetworkRegret regret;
  NetworkDelayStats stats;
  double rms_active = 0.0;
  int max_active = 0;
  int total_plays = 0;
  double regularizer_at_comparator = 0.0;
  double max_lag_estimate = 0.0;  // max over rounds of the queried lag estimate
};

// Message-driven replay: agents keep private pools, feedback travels per the
// latency table, every round's losses are the flattened entries of `losses`.
NetworkRunResult run_network(const NetworkTrace& trace, const Geometry& geometry,
                             const LossSequence& losses, const Vec& comparator,
                             const NetworkRunConfig& config);

// Recomputes the three regret totals from recorded plays; the discrepancy
// term uses the declared gradient bound as the Lipschitz modulus.
NetworkRegret network_regrets(const NetworkTrace& trace, const LossSequence& losses,
                              const std::vector<std::vector<Vec>>& plays, const Vec& comparator,
                              const Geometry& geometry, double lipschitz_bound,
                              int reference_position);

}  // namespace delopt
