#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "delopt/geometry.hpp"
#include "delopt/losses.hpp"
#include "delopt/schedule.hpp"
#include "delopt/vec.hpp"

namespace delopt {

// One round's feedback in transit: the gradient plus the metadata the
// producer relays with it (how much feedback it had used and that feedback's
// total dual norm, and for field guesses the measured guess gap).
struct GradientRecord {
  Time timestamp = 0;
  int producer = 1;
  Vec gradient;
  double dual_norm = 0.0;
  int used_count = 0;
  double used_norm_sum = 0.0;
  double guess_gap = 0.0;        // ||field - guessed field|| at the base point
  bool has_metadata = true;
};

// Feedback an agent has received so far, keyed by origin round. Dual sums
// always accumulate in ascending-round order, which pins the floating-point
// result independently of arrival order.
class LearnerPool {
 public:
  bool contains(Time s) const { return records_.count(s) != 0; }
  const GradientRecord& record(Time s) const;
  int size() const { return static_cast<int>(records_.size()); }
  double norm_sum() const { return norm_sum_; }
  double guess_gap_sq_sum() const { return guess_gap_sq_sum_; }

  void insert(GradientRecord rec);

  std::vector<Time> timestamps() const;
  Vec dual_sum(int dim) const;
  Vec dual_sum(int dim, const std::vector<Time>& subset) const;
  double norm_sum(const std::vector<Time>& subset) const;

 private:
  std::map<Time, GradientRecord> records_;
  double norm_sum_ = 0.0;
  double guess_gap_sq_sum_ = 0.0;
};

// x_t = mirror(-eta * sum of available gradients).
Vec dda_predict(const Geometry& geometry, const LearnerPool& pool,
                const std::vector<Time>& available, double eta);

enum class RateKind {
  kConstant,
  kDecreasing,      // R / (G sqrt(t (1 + 2 tau)))
  kAdaDelayO,       // R / sqrt(lag_estimate + G^2 (2 tau^2 + 3 tau + 1))
  kAdaDelayOPlus,   // min(previous, R / sqrt(lag_estimate + G^2 residual))
  kCardDecreasing,  // R / (G sqrt((1 + 2 tau) (|S_t| + tau + 1)))
  kAdaDelayDist,    // R / sqrt(relayed lag estimate + G^2 (2 tau + 1)^2)
};

struct RateConfig {
  RateKind kind = RateKind::kConstant;
  double eta = 0.0;  // kConstant
  double R = 1.0;
  double G = 1.0;
  std::optional<int> tau;  // required by Decreasing / AdaDelayO / Card / Dist

  static RateConfig constant(double eta);
  static RateConfig decreasing(double R, double G, int tau);
  static RateConfig adadelay_o(double R, double G, int tau);
  static RateConfig adadelay_o_plus(double R, double G);
  static RateConfig card_decreasing(double R, double G, int tau);
  static RateConfig adadelay_dist(double R, double G, int tau);
};

const char* rate_kind_name(RateKind kind);

// Stateful learning-rate schedule for one agent. on_receive folds each newly
// arrived record into the lag estimate and residual count; query emits the
// step's rate and must be called exactly once per round the agent plays,
// after that round's deliveries.
class LearningRatePolicy {
 public:
  explicit LearningRatePolicy(const RateConfig& config);

  void on_receive(const GradientRecord& rec, const LearnerPool& pool_before);
  double query(Time t, int used_count);

  double lag_estimate() const { return lag_estimate_; }
  long long residual() const { return residual_; }
  bool needs_monotone_feedback() const;
  bool needs_relay_metadata() const { return config_.kind == RateKind::kAdaDelayDist; }
  const RateConfig& config() const { return config_; }

 private:
  RateConfig config_;
  double lag_estimate_ = 0.0;  // arrival-order (or relayed) lag estimate
  long long residual_ = 0;     // additive slack count, maintained incrementally
  double previous_eta_;        // kAdaDelayOPlus clamp
};

// Folds one arrival into a lag estimate: n^2 + 2 n (pool norm sum - norm sum
// the producer had used). Exposed for direct verification against the
// from-scratch definition.
double lag_estimate_increment(const GradientRecord& rec, double pool_norm_sum);

struct RegretLedger {
  double actual = 0.0;      // sum of loss(x_t) - loss(p)
  double linearized = 0.0;  // sum of <g_t, x_t - p>
  std::vector<double> inst_actual;  // [t], 1-based
  std::vector<double> cum_actual;   // [t], 1-based
};

struct StepRow {
  Time t = 0;
  int agent = 1;
  double eta = 0.0;
  int used_count = 0;
  double used_norm_sum = 0.0;
  double loss_value = 0.0;
  double grad_norm = 0.0;
  double lag_estimate = 0.0;
  long long residual = 0;
};

struct StreamRunConfig {
  RateConfig rate;
  bool defer_usage = false;  // shrink the used set until every used record
                             // was produced with strictly smaller usage
  bool record_used_sets = false;
};

struct StreamRunResult {
  std::vector<Vec> points;  // [t], 1-based (entry 0 empty)
  std::vector<StepRow> rows;
  std::vector<GradientRecord> produced;                // [t], 1-based
  std::vector<std::vector<Time>> used_sets;            // [t] if recorded
  RegretLedger ledger;
  DelayStats stats;      // from the sets actually used
  Vec final_prediction;  // post-horizon point from every produced gradient
  double regularizer_at_comparator = 0.0;
  double max_grad_norm = 0.0;
};

// Replays delayed dual averaging over a timeline. The comparator must be
// feasible; regrets and the regularizer value are evaluated against it.
StreamRunResult run_single_agent(const Timeline& timeline, const Geometry& geometry,
                                 const LossSequence& losses, const Vec& comparator,
                                 const StreamRunConfig& config);

// ---- Regret-bound right-hand sides, all from measured run data ----

// h(p)/eta_T + (1/2) sum eta_t (n_t^2 + 2 n_t * unavailable-norm-sum_t);
// valid whenever the rate sequence is non-increasing in t.
double rhs_time_ordered(const StreamRunResult& run);

// Same shape along a reordering of the rounds; order[k-1] is the k-th round.
double rhs_along_order(const StreamRunResult& run, const std::vector<Time>& order);

// Ordering that sorts rounds by effective rate key (R^2/eta^2), breaking ties
// by used-set size then round; faithful under the cardinality/reception
// orderliness the keyed policies require.
std::vector<Time> rate_key_order(const StreamRunResult& run);

}  // namespace delopt
