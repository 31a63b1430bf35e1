#include "delopt/optimistic.hpp"

#include <algorithm>
#include <cmath>

#include "delopt/errors.hpp"

namespace delopt {

const char* guess_kind_name(GuessKind kind) {
  switch (kind) {
    case GuessKind::kZero: return "zero";
    case GuessKind::kLastUniform: return "last_uniform";
    case GuessKind::kFieldGlobal: return "field_global";
    case GuessKind::kFieldLocal: return "field_local";
  }
  return "unknown";
}

OptimisticRateConfig OptimisticRateConfig::pair(double eta, double eta_tilde) {
  if (!(eta > 0.0) || !(eta_tilde > 0.0) || !std::isfinite(eta) || !std::isfinite(eta_tilde)) {
    throw ConfigError("optimistic rate: both rates must be positive and finite");
  }
  OptimisticRateConfig c;
  c.kind = OptimisticRateKind::kPair;
  c.eta = eta;
  c.eta_tilde = eta_tilde;
  return c;
}

OptimisticRateConfig OptimisticRateConfig::relaxed(double eta) {
  if (!(eta > 0.0) || !std::isfinite(eta)) {
    throw ConfigError("optimistic rate: base rate must be positive and finite");
  }
  OptimisticRateConfig c;
  c.kind = OptimisticRateKind::kRelaxed;
  c.eta = eta;
  return c;
}

OptimisticRateConfig OptimisticRateConfig::adaptive(double R, double G, double L, int tau) {
  if (!(R > 0.0) || !(G > 0.0) || !(L > 0.0) || tau < 0) {
    throw ConfigError("optimistic rate: adaptive rates need positive R, G, L and tau >= 0");
  }
  OptimisticRateConfig c;
  c.kind = OptimisticRateKind::kAdaptive;
  c.R = R;
  c.G = G;
  c.L = L;
  c.tau = tau;
  return c;
}

std::pair<double, double> lr_pair_constant(double R, int tau, double v_bar) {
  if (!(R > 0.0) || tau < 0) throw ConfigError("lr_pair_constant: need R > 0 and tau >= 0");
  if (!(v_bar > 0.0)) throw ConfigError("lr_pair_constant: variation budget must be positive");
  const double eta = R / std::sqrt((2.0 * static_cast<double>(tau) + 1.0) * v_bar);
  return {eta, (2.0 * static_cast<double>(tau) + 1.0) * eta};
}

std::pair<double, double> lr_pair_adaptive(double dev_sq_sum, double R, double G, double L,
                                           int tau) {
  if (dev_sq_sum < 0.0 || !(R > 0.0) || !(G > 0.0) || !(L > 0.0) || tau < 0) {
    throw ConfigError("lr_pair_adaptive: bad parameters");
  }
  const double t4 = 4.0 * static_cast<double>(tau) + 1.0;
  const double gg = 4.0 * G * G;
  const double eta_tilde =
      std::min(R * std::sqrt(t4) /
                   (2.0 * std::sqrt(dev_sq_sum + gg * (static_cast<double>(tau) + 1.0))),
               1.0 / (std::sqrt(2.0) * L));
  const double eta =
      std::min(R / (2.0 * std::sqrt(t4 * (dev_sq_sum + gg * (3.0 * static_cast<double>(tau) + 1.0)))),
               1.0 / (std::sqrt(2.0) * L * t4));
  return {eta, eta_tilde};
}

std::pair<Vec, Vec> doda_step(const Geometry& geometry, const Vec& x_start,
                              const LearnerPool& pool, const std::vector<Time>& available,
                              double eta, double eta_tilde, const Vec& guess) {
  if (geometry.kind() != GeometryKind::kEuclideanFree) {
    throw ConfigError("optimistic step: only the unconstrained Euclidean geometry is supported");
  }
  if (!(eta > 0.0) || !(eta_tilde > 0.0) || !std::isfinite(eta) || !std::isfinite(eta_tilde)) {
    throw ConfigError("optimistic step: rates must be positive and finite");
  }
  require_same_dim(x_start, guess, "optimistic step");
  Vec base(x_start);
  axpy(-eta, pool.dual_sum(geometry.dim(), available), base);
  Vec played(base);
  axpy(-eta_tilde, guess, played);
  return {std::move(base), std::move(played)};
}

namespace {

// d_t = |missing at t| + |later rounds still missing t| + 1, taken for the
// agent acting at each round.
std::vector<int> relaxed_counts(const Timeline& timeline) {
  const int horizon = timeline.horizon();
  std::vector<int> d(static_cast<std::size_t>(horizon) + 1, 1);
  for (Time t = 1; t <= horizon; ++t) {
    const std::vector<Time> missing = timeline.unavailable_set(t);
    d[static_cast<std::size_t>(t)] += static_cast<int>(missing.size());
    for (Time s : missing) ++d[static_cast<std::size_t>(s)];
  }
  return d;
}

}  // namespace

OptimisticRunResult run_optimistic(const Timeline& timeline, const Geometry& geometry,
                                   const LossSequence& losses, const Vec& comparator,
                                   const OptimisticRunConfig& config) {
  if (geometry.kind() != GeometryKind::kEuclideanFree) {
    throw ConfigError("optimistic run: only the unconstrained Euclidean geometry is supported");
  }
  const int horizon = timeline.horizon();
  const int agents = timeline.num_agents();
  const int dim = geometry.dim();
  if (losses.horizon() < horizon) {
    throw ConfigError("optimistic run: loss sequence shorter than the timeline horizon");
  }
  if (losses.dim() != dim) {
    throw ConfigError("optimistic run: loss dimension does not match the geometry");
  }
  if (static_cast<int>(comparator.size()) != dim) {
    throw ConfigError("optimistic run: comparator dimension does not match the geometry");
  }
  if (config.tau < 0) throw ConfigError("optimistic run: tau must be nonnegative");
  Vec x_start = config.x_start.empty() ? zeros(static_cast<std::size_t>(dim)) : config.x_start;
  if (static_cast<int>(x_start.size()) != dim) {
    throw ConfigError("optimistic run: start point dimension does not match the geometry");
  }

  const bool field_mode =
      config.guess == GuessKind::kFieldGlobal || config.guess == GuessKind::kFieldLocal;
  if (config.rate.kind == OptimisticRateKind::kAdaptive && !field_mode) {
    throw ConfigError("optimistic run: the adaptive rate needs a field guess policy");
  }
  if (config.rate.kind == OptimisticRateKind::kPair && config.strict_scale) {
    const double floor = (2.0 * static_cast<double>(config.tau) + 1.0) * config.rate.eta;
    if (config.rate.eta_tilde < floor * (1.0 - 1e-12)) {
      throw ConfigError(
          "optimistic run: the played-step rate must be at least (2 tau + 1) times the "
          "update rate; disable strict scaling to run anyway");
    }
  }

  std::vector<int> d_counts;
  if (config.rate.kind == OptimisticRateKind::kRelaxed) d_counts = relaxed_counts(timeline);

  std::vector<LearnerPool> pools(static_cast<std::size_t>(agents) + 1);
  std::vector<std::vector<std::pair<Time, Time>>> queue(static_cast<std::size_t>(agents) + 1);
  for (int i = 1; i <= agents; ++i) {
    for (Time s = 1; s <= horizon; ++s) {
      const Time a = timeline.arrival(s, i);
      if (a != kNeverArrives && a <= horizon) queue[static_cast<std::size_t>(i)].push_back({a, s});
    }
    std::sort(queue[static_cast<std::size_t>(i)].begin(), queue[static_cast<std::size_t>(i)].end());
  }
  std::vector<std::size_t> next_delivery(static_cast<std::size_t>(agents) + 1, 0);

  OptimisticRunResult out;
  out.base_points.resize(static_cast<std::size_t>(horizon) + 1);
  out.played_points.resize(static_cast<std::size_t>(horizon) + 1);
  out.rows.reserve(static_cast<std::size_t>(horizon));
  out.ledger.inst_actual.assign(static_cast<std::size_t>(horizon) + 1, 0.0);
  out.ledger.cum_actual.assign(static_cast<std::size_t>(horizon) + 1, 0.0);
  out.comparator_gap_sq = dot(sub(comparator, x_start), sub(comparator, x_start));

  std::vector<GradientRecord> produced(static_cast<std::size_t>(horizon) + 1);
  std::vector<std::vector<Time>> used_series(static_cast<std::size_t>(horizon) + 1);
  const double lips = config.rate.L;
  double rhs_gap_sum = 0.0;
  double rhs_dev_sum = 0.0;
  double last_eta = 0.0;

  for (Time t = 1; t <= horizon; ++t) {
    for (int i = 1; i <= agents; ++i) {
      auto& q = queue[static_cast<std::size_t>(i)];
      std::size_t& k = next_delivery[static_cast<std::size_t>(i)];
      while (k < q.size() && q[k].first <= t) {
        pools[static_cast<std::size_t>(i)].insert(produced[static_cast<std::size_t>(q[k].second)]);
        ++k;
      }
    }

    const int agent = timeline.active_agent(t);
    LearnerPool& pool = pools[static_cast<std::size_t>(agent)];
    const std::vector<Time> used = pool.timestamps();

    double eta = 0.0;
    double eta_tilde = 0.0;
    switch (config.rate.kind) {
      case OptimisticRateKind::kPair:
        eta = config.rate.eta;
        eta_tilde = config.rate.eta_tilde;
        break;
      case OptimisticRateKind::kRelaxed:
        eta = config.rate.eta;
        eta_tilde = static_cast<double>(d_counts[static_cast<std::size_t>(t)]) * config.rate.eta;
        break;
      case OptimisticRateKind::kAdaptive: {
        const auto pair = lr_pair_adaptive(pool.guess_gap_sq_sum(), config.rate.R,
                                           config.rate.G, config.rate.L, config.rate.tau);
        eta = pair.first;
        eta_tilde = pair.second;
        break;
      }
    }

    // Base point first; field guesses need it before the played point exists.
    Vec base(x_start);
    axpy(-eta, pool.dual_sum(dim, used), base);

    Vec guess = zeros(static_cast<std::size_t>(dim));
    double deviation = 0.0;
    switch (config.guess) {
      case GuessKind::kZero:
        break;
      case GuessKind::kLastUniform: {
        const Time want = t - config.tau - 1;
        if (want >= 1 && pool.contains(want)) guess = pool.record(want).gradient;
        break;
      }
      case GuessKind::kFieldGlobal:
      case GuessKind::kFieldLocal: {
        Time newest = 0;
        for (Time s : used) {
          if (config.guess == GuessKind::kFieldLocal && produced[static_cast<std::size_t>(s)].producer != agent) {
            continue;
          }
          newest = std::max(newest, s);
        }
        if (newest >= 1) guess = losses.at(newest).gradient(base);
        deviation = l2_norm(sub(losses.at(t).gradient(base), guess));
        break;
      }
    }

    Vec played(base);
    axpy(-eta_tilde, guess, played);

    const Loss& loss = losses.at(t);
    const double value = loss.value(played);
    Vec g = loss.gradient(played);
    const double gnorm = l2_norm(g);
    out.max_grad_norm = std::max(out.max_grad_norm, gnorm);
    const double guess_norm = l2_norm(guess);
    const double gap_sq = dot(sub(g, guess), sub(g, guess));

    const double inst = value - loss.value(comparator);
    out.ledger.actual += inst;
    out.ledger.linearized += dot(g, sub(played, comparator));
    out.ledger.inst_actual[static_cast<std::size_t>(t)] = inst;
    out.ledger.cum_actual[static_cast<std::size_t>(t)] = out.ledger.actual;

    rhs_gap_sum += 0.5 * eta_tilde * (gap_sq - guess_norm * guess_norm);
    rhs_dev_sum += eta_tilde * deviation * deviation;
    out.deviation_total += deviation * deviation;

    const bool smooth_ok = !field_mode || 2.0 * eta_tilde * eta_tilde * lips * lips <= 1.0 + 1e-12;
    out.smooth_condition_all = out.smooth_condition_all && smooth_ok;

    GradientRecord rec;
    rec.timestamp = t;
    rec.producer = agent;
    rec.dual_norm = gnorm;
    rec.used_count = static_cast<int>(used.size());
    rec.used_norm_sum = pool.norm_sum();
    rec.guess_gap = deviation;
    rec.gradient = std::move(g);
    produced[static_cast<std::size_t>(t)] = std::move(rec);

    OptimisticStepRow row;
    row.t = t;
    row.agent = agent;
    row.eta = eta;
    row.eta_tilde = eta_tilde;
    row.used_count = static_cast<int>(used.size());
    row.loss_value = value;
    row.grad_norm = gnorm;
    row.guess_norm = guess_norm;
    row.gap_sq = gap_sq;
    row.deviation = deviation;
    row.smooth_ok = smooth_ok;
    row.relaxed_count =
        config.rate.kind == OptimisticRateKind::kRelaxed ? d_counts[static_cast<std::size_t>(t)] : 1;
    out.relaxed_count_total += row.relaxed_count;
    out.rows.push_back(row);

    out.base_points[static_cast<std::size_t>(t)] = std::move(base);
    out.played_points[static_cast<std::size_t>(t)] = std::move(played);
    used_series[static_cast<std::size_t>(t)] = used;
    last_eta = eta;
  }

  std::vector<double> norms(static_cast<std::size_t>(horizon) + 1, 0.0);
  for (Time t = 1; t <= horizon; ++t) {
    norms[static_cast<std::size_t>(t)] = produced[static_cast<std::size_t>(t)].dual_norm;
  }
  bool lost = false;
  for (Time s = 1; s < horizon && !lost; ++s) {
    for (Time t = s + 1; t <= horizon; ++t) {
      if (timeline.arrival(s, timeline.active_agent(t)) == kNeverArrives) {
        lost = true;
        break;
      }
    }
  }
  out.stats = delay_stats_from_sets(used_series, norms, lost);

  out.rhs_gap = out.comparator_gap_sq / (2.0 * last_eta) + rhs_gap_sum;
  out.rhs_deviation = out.comparator_gap_sq / (2.0 * last_eta) + rhs_dev_sum;
  return out;
}

double variation(const LossSequence& seq, int k) {
  if (k < 1) throw ConfigError("variation: offset must be positive");
  const int horizon = seq.horizon();
  const std::size_t dim = static_cast<std::size_t>(seq.dim());
  const Vec origin = zeros(dim);
  double total = 0.0;
  for (int t = 1; t <= horizon; ++t) {
    Vec diff = seq.at(t).gradient(origin);
    if (t - k >= 1) axpy(-1.0, seq.at(t - k).gradient(origin), diff);
    total += dot(diff, diff);
  }
  return total;
}

LossSequence gen_lb_seq_periods(int m, int len, int tau) {
  if (tau < 0 || m <= tau || len <= tau) {
    throw ValidationError("periods sequence: need m > tau >= 0 and len > tau");
  }
  std::vector<Loss> losses;
  losses.reserve(static_cast<std::size_t>(2 * m * len + tau + 1));
  for (int block = 0; block < 2 * m; ++block) {
    const double sign = block % 2 == 0 ? -1.0 : 1.0;
    for (int j = 0; j < len; ++j) losses.push_back(Loss::linear({sign}));
  }
  for (int j = 0; j <= tau; ++j) losses.push_back(Loss::linear({-1.0}));
  return LossSequence(std::move(losses), 1.0);
}

LossSequence gen_lb_seq_zero_one(int m, int len, int tau) {
  if (tau < 0 || m <= tau) {
    throw ValidationError("zero-one sequence: need m > tau >= 0");
  }
  if (len <= 4 * tau + 4) {
    throw ValidationError("zero-one sequence: need len > 4 tau + 4");
  }
  std::vector<Loss> losses;
  losses.reserve(static_cast<std::size_t>(2 * m * len + tau + 1));
  for (int rep = 0; rep < 4 * m; ++rep) {
    for (int j = 0; j <= tau; ++j) losses.push_back(Loss::linear({0.0}));
    for (int j = 0; j <= tau; ++j) losses.push_back(Loss::linear({1.0}));
  }
  const int padding = 2 * m * len - 8 * m * (tau + 1);
  for (int j = 0; j < padding; ++j) losses.push_back(Loss::linear({0.0}));
  for (int j = 0; j <= tau; ++j) losses.push_back(Loss::linear({1.0}));
  return LossSequence(std::move(losses), 1.0);
}

int lb_preset_len(int m, int tau) {
  if (m < 1 || tau < 0) throw ConfigError("lb_preset_len: need m >= 1 and tau >= 0");
  return (16 * m + 9) * (tau + 1) * (tau + 1) + 2 * tau * (tau + 1);
}

LossSequence gen_repeat_seq(const LossSequence& base, int tau) {
  if (tau < 0) throw ConfigError("gen_repeat_seq: tau must be nonnegative");
  std::vector<Loss> losses;
  losses.reserve(static_cast<std::size_t>(base.horizon() * (tau + 1)));
  for (int t = 1; t <= base.horizon(); ++t) {
    for (int j = 0; j <= tau; ++j) losses.push_back(base.at(t));
  }
  return LossSequence(std::move(losses), base.gradient_bound());
}

}  // namespace delopt
