#pragma once

#include <cstdint>
#include <limits>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "delopt/vec.hpp"

namespace delopt {

// Rounds are 1-based; feedback produced at round s can reach a consumer at
// round s+1 at the earliest.
using Time = int;

// Arrival slot for feedback that never reaches an agent.
constexpr Time kNeverArrives = std::numeric_limits<Time>::max();

// How arrival times are produced when a timeline is built.
struct DelayModel {
  enum class Kind { kConstant, kIidGeometric, kTrace };

  Kind kind = Kind::kConstant;
  int tau = 0;           // kConstant: every feedback arrives tau rounds late
  double p = 0.5;        // kIidGeometric: P(delay = k) = p (1-p)^k
  int cap = -1;          // kIidGeometric: delays clipped to cap (-1: unbounded)
  std::string trace_text;  // kTrace: rows "origin producer consumer arrival"

  static DelayModel constant(int tau);
  static DelayModel iid_geometric(double p, int cap = -1);
  static DelayModel trace(std::string text);
};

// Who acts when, and when each round's feedback becomes available to whom.
// A timeline is always a single stream: at each round exactly one agent
// predicts. Multi-agent rounds are serialized upstream (see decentralized).
class Timeline {
 public:
  Timeline(int horizon, int num_agents);

  int horizon() const { return horizon_; }
  int num_agents() const { return num_agents_; }

  void set_active(Time t, int agent);
  int active_agent(Time t) const;
  int producer(Time s) const { return active_agent(s); }

  // when >= s+1 (kNeverArrives allowed); throws ValidationError otherwise.
  void set_arrival(Time s, int agent, Time when);
  Time arrival(Time s, int agent) const;

  bool is_available(Time s, int agent, Time t) const { return arrival(s, agent) <= t; }

  // S_t for the agent active at t (sorted ascending). available_set(t, i)
  // gives agent i's view.
  std::vector<Time> available_set(Time t) const;
  std::vector<Time> available_set(Time t, int agent) const;
  std::vector<Time> unavailable_set(Time t) const;

  // true iff S_t, taken across the active agents, never loses an element as
  // t grows. Holds automatically for single-agent timelines.
  bool has_monotone_feedback() const;

  std::string to_trace_rows() const;

 private:
  void check_time(Time t, const char* where) const;
  void check_agent(int agent, const char* where) const;

  int horizon_;
  int num_agents_;
  std::vector<int> active_;                 // [t], 1-based rounds
  std::vector<std::vector<Time>> arrival_;  // [s][agent]
};

// activation[t-1] names the agent predicting at round t; pass {} for a
// single-agent timeline.
Timeline build_timeline(const DelayModel& model, int horizon, int num_agents,
                        const std::vector<int>& activation, std::uint64_t seed);

Timeline parse_timeline_trace(const std::string& text, int horizon, int num_agents,
                              const std::vector<int>& activation);

// The four delay measures of a run. lag[t] needs the feedback dual norms;
// indices are 1-based with entry 0 unused.
struct DelayStats {
  int max_delay = 0;              // smallest tau with {1..t-tau-1} in S_t for all t
  int max_unavailability = 0;     // max_t |U_t|
  std::vector<long long> cumulative_unavailability;  // D_t
  std::vector<double> lag;                           // Lambda_t
  bool lost_feedback = false;     // some feedback never arrives; max_delay = T-1
};

DelayStats delay_stats(const Timeline& timeline, const std::vector<double>& dual_norms);

// Same measures computed from explicit per-round availability sets
// (available[t], 1-based). Used when a run restricts usage below raw arrival.
DelayStats delay_stats_from_sets(const std::vector<std::vector<Time>>& available,
                                 const std::vector<double>& dual_norms, bool lost_feedback);

// Order in which feedback reaches an agent: a permutation of 1..T sorted by
// (arrival time, origin round). Feedback that never arrives sorts last.
std::vector<Time> arrival_order(const Timeline& timeline, int agent);

// Rounds whose feedback reaches the agent strictly earlier in its arrival
// order than round s's feedback.
std::vector<Time> received_before(const Timeline& timeline, int agent, Time s);

// order[k-1] = k-th round in the candidate ordering. Faithful means every
// round's available feedback is ordered before the round itself.
bool is_faithful(const std::vector<Time>& order, const Timeline& timeline);

enum class BacklogVariant {
  kSingleStream,  // one agent's own arrival order (requires num_agents == 1)
  kDistributed,   // the arrival order of the agent active at t
};

// Pairs {s, r} with s in S_t whose cross term the arrival-order lag estimate
// has already absorbed even though r was unavailable when round s played.
std::set<std::pair<Time, Time>> backlog_pairs(const Timeline& timeline, Time t,
                                              BacklogVariant variant);

// t + 2 D_t - |S_t| - 2 |B_t|: the additive slack that makes the arrival-order
// lag estimate dominate the true lag. Single-agent timelines only.
long long rho(const Timeline& timeline, Time t);

// Every used feedback was produced with strictly fewer available records than
// the round using it. Needed by cardinality-keyed rate schedules.
bool cardinality_in_order(const Timeline& timeline);

// Every agent receives a round's feedback only after everything that round
// itself used. Needed by the relayed lag estimate.
bool in_order_reception(const Timeline& timeline);

}  // namespace delopt
