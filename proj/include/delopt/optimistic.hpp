#pragma once

#include <utility>
#include <vector>

#include "delopt/dda.hpp"
#include "delopt/geometry.hpp"
#include "delopt/losses.hpp"
#include "delopt/schedule.hpp"
#include "delopt/vec.hpp"

namespace delopt {

// How the played point's gradient guess is formed.
//  kZero        : no guess; the played point equals the base point.
//  kLastUniform : the gradient produced tau+1 rounds ago (zero when that
//                 round does not exist or has not arrived).
//  kFieldGlobal : the newest received loss's gradient field, evaluated at
//                 the current base point (full-feedback mode).
//  kFieldLocal  : the newest received loss among those the acting agent
//                 itself played, evaluated at the current base point.
enum class GuessKind { kZero, kLastUniform, kFieldGlobal, kFieldLocal };

const char* guess_kind_name(GuessKind kind);

enum class OptimisticRateKind {
  kPair,     // constant (eta, eta_tilde)
  kRelaxed,  // constant eta; eta_tilde_t = d_t * eta with per-round counts
             // d_t = |missing at t| + |rounds still missing t later| + 1
  kAdaptive, // deviation-driven pair with Lipschitz caps
};

struct OptimisticRateConfig {
  OptimisticRateKind kind = OptimisticRateKind::kPair;
  double eta = 0.0;        // kPair / kRelaxed base rate
  double eta_tilde = 0.0;  // kPair
  double R = 1.0;          // kAdaptive
  double G = 1.0;          // kAdaptive
  double L = 1.0;          // kAdaptive
  int tau = 0;             // kAdaptive

  static OptimisticRateConfig pair(double eta, double eta_tilde);
  static OptimisticRateConfig relaxed(double eta);
  static OptimisticRateConfig adaptive(double R, double G, double L, int tau);
};

// eta = R / sqrt((2 tau + 1) v_bar), eta_tilde = (2 tau + 1) eta.
std::pair<double, double> lr_pair_constant(double R, int tau, double v_bar);

// The deviation-driven pair: dev_sq_sum ranges over the received rounds'
// relayed guess gaps. Both values carry a Lipschitz cap.
std::pair<double, double> lr_pair_adaptive(double dev_sq_sum, double R, double G, double L,
                                           int tau);

// One base/played update on the unconstrained Euclidean geometry:
// base = x_start - eta * sum of available gradients; played = base -
// eta_tilde * guess. Throws ConfigError for any constrained geometry.
std::pair<Vec, Vec> doda_step(const Geometry& geometry, const Vec& x_start,
                              const LearnerPool& pool, const std::vector<Time>& available,
                              double eta, double eta_tilde, const Vec& guess);

struct OptimisticRunConfig {
  OptimisticRateConfig rate;
  GuessKind guess = GuessKind::kZero;
  int tau = 0;  // delay bound: scale check, guess lookback, adaptive rates
  Vec x_start;  // defaults to the origin
  // With the pair rate, reject eta_tilde < (2 tau + 1) eta up front; turn
  // off to reproduce the single-rate failure mode.
  bool strict_scale = true;
};

struct OptimisticStepRow {
  Time t = 0;
  int agent = 1;
  double eta = 0.0;
  double eta_tilde = 0.0;
  int used_count = 0;
  double loss_value = 0.0;  // at the played point
  double grad_norm = 0.0;   // gradient at the played point
  double guess_norm = 0.0;
  double gap_sq = 0.0;         // ||gradient - guess||^2
  double deviation = 0.0;      // field modes: ||field - guessed field|| at base
  bool smooth_ok = true;       // 2 eta_tilde^2 L^2 <= 1 (field modes)
  int relaxed_count = 1;       // d_t (relaxed rate)
};

struct OptimisticRunResult {
  std::vector<Vec> base_points;    // [t], 1-based
  std::vector<Vec> played_points;  // [t], 1-based
  std::vector<OptimisticStepRow> rows;
  RegretLedger ledger;  // measured at the played points
  DelayStats stats;
  // ||p - x_start||^2 / (2 eta_T) + sum eta_tilde_t (gap_sq - guess^2) / 2.
  double rhs_gap = 0.0;
  // ||p - x_start||^2 / (2 eta_T) + sum eta_tilde_t * deviation^2 (field).
  double rhs_deviation = 0.0;
  double deviation_total = 0.0;       // sum of deviation^2
  long long relaxed_count_total = 0;  // sum of d_t
  bool smooth_condition_all = true;
  double comparator_gap_sq = 0.0;  // ||p - x_start||^2
  double max_grad_norm = 0.0;
};

// Replays the optimistic two-step method over a timeline. Unconstrained
// Euclidean only; field guesses evaluate the arriving losses' gradients at
// the current base point and relay the measured deviation.
OptimisticRunResult run_optimistic(const Timeline& timeline, const Geometry& geometry,
                                   const LossSequence& losses, const Vec& comparator,
                                   const OptimisticRunConfig& config);

// ---- Adversarial scalar sequences and variation ----

// sum over t of ||g_t - g_{t-k}||^2 with g_s = 0 for s < 1; gradients are
// taken at the origin (the generators below emit linear losses).
double variation(const LossSequence& seq, int k);

// 2m blocks of len identical entries alternating -1 / +1 (starting at -1),
// then tau+1 trailing -1 entries. Length 2*m*len + tau + 1; the
// (tau+1)-shifted variation is exactly (8m+1)(tau+1).
LossSequence gen_lb_seq_periods(int m, int len, int tau);

// 4m repeats of [tau+1 zeros, tau+1 ones], zeros up to 2*m*len entries,
// then tau+1 trailing ones. Same length and (tau+1)-shifted variation as
// the companion generator for equal parameters.
LossSequence gen_lb_seq_zero_one(int m, int len, int tau);

// The block length that separates the two generators' regrets at scale:
// (16m+9)(tau+1)^2 + 2 tau (tau+1).
int lb_preset_len(int m, int tau);

// Each entry of base repeated tau+1 times in place.
LossSequence gen_repeat_seq(const LossSequence& base, int tau);

struct VariationReport {
  double variation_tau_plus = 0.0;    // (tau+1)-shifted variation
  double deviation_total = 0.0;       // field-guess deviation sum of squares
  long long relaxed_count_total = 0;  // sum of d_t
};

}  // namespace delopt
