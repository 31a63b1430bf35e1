#include "delopt/dda.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "delopt/errors.hpp"

namespace delopt {

const GradientRecord& LearnerPool::record(Time s) const {
  const auto it = records_.find(s);
  if (it == records_.end()) {
    throw ProtocolError("pool: no record for round " + std::to_string(s));
  }
  return it->second;
}

void LearnerPool::insert(GradientRecord rec) {
  if (records_.count(rec.timestamp)) {
    throw ProtocolError("pool: duplicate record for round " + std::to_string(rec.timestamp));
  }
  norm_sum_ += rec.dual_norm;
  guess_gap_sq_sum_ += rec.guess_gap * rec.guess_gap;
  records_.emplace(rec.timestamp, std::move(rec));
}

std::vector<Time> LearnerPool::timestamps() const {
  std::vector<Time> out;
  out.reserve(records_.size());
  for (const auto& [s, rec] : records_) out.push_back(s);
  return out;
}

Vec LearnerPool::dual_sum(int dim) const {
  Vec y = zeros(static_cast<std::size_t>(dim));
  for (const auto& [s, rec] : records_) axpy(1.0, rec.gradient, y);
  return y;
}

Vec LearnerPool::dual_sum(int dim, const std::vector<Time>& subset) const {
  Vec y = zeros(static_cast<std::size_t>(dim));
  for (Time s : subset) axpy(1.0, record(s).gradient, y);
  return y;
}

double LearnerPool::norm_sum(const std::vector<Time>& subset) const {
  double s = 0.0;
  for (Time t : subset) s += record(t).dual_norm;
  return s;
}

Vec dda_predict(const Geometry& geometry, const LearnerPool& pool,
                const std::vector<Time>& available, double eta) {
  if (!(eta > 0.0) || !std::isfinite(eta)) {
    throw ConfigError("dda_predict: rate must be positive and finite");
  }
  Vec y = pool.dual_sum(geometry.dim(), available);
  for (double& v : y) v *= -eta;
  return geometry.mirror(y);
}

namespace {

void require_rate_params(double R, double G) {
  if (!(R > 0.0) || !(G > 0.0)) {
    throw ConfigError("rate: R and G must be positive");
  }
}

void require_tau(const std::optional<int>& tau, const char* kind) {
  if (!tau.has_value()) {
    throw ConfigError(std::string("rate: ") + kind + " needs a delay bound tau");
  }
  if (*tau < 0) throw ConfigError("rate: tau must be nonnegative");
}

}  // namespace

RateConfig RateConfig::constant(double eta) {
  if (!(eta > 0.0) || !std::isfinite(eta)) {
    throw ConfigError("rate: constant rate must name a positive eta");
  }
  RateConfig c;
  c.kind = RateKind::kConstant;
  c.eta = eta;
  return c;
}

RateConfig RateConfig::decreasing(double R, double G, int tau) {
  require_rate_params(R, G);
  RateConfig c;
  c.kind = RateKind::kDecreasing;
  c.R = R;
  c.G = G;
  c.tau = tau;
  require_tau(c.tau, "decreasing");
  return c;
}

RateConfig RateConfig::adadelay_o(double R, double G, int tau) {
  require_rate_params(R, G);
  RateConfig c;
  c.kind = RateKind::kAdaDelayO;
  c.R = R;
  c.G = G;
  c.tau = tau;
  require_tau(c.tau, "adadelay_o");
  return c;
}

RateConfig RateConfig::adadelay_o_plus(double R, double G) {
  require_rate_params(R, G);
  RateConfig c;
  c.kind = RateKind::kAdaDelayOPlus;
  c.R = R;
  c.G = G;
  return c;
}

RateConfig RateConfig::card_decreasing(double R, double G, int tau) {
  require_rate_params(R, G);
  RateConfig c;
  c.kind = RateKind::kCardDecreasing;
  c.R = R;
  c.G = G;
  c.tau = tau;
  require_tau(c.tau, "card_decreasing");
  return c;
}

RateConfig RateConfig::adadelay_dist(double R, double G, int tau) {
  require_rate_params(R, G);
  RateConfig c;
  c.kind = RateKind::kAdaDelayDist;
  c.R = R;
  c.G = G;
  c.tau = tau;
  require_tau(c.tau, "adadelay_dist");
  return c;
}

const char* rate_kind_name(RateKind kind) {
  switch (kind) {
    case RateKind::kConstant: return "constant";
    case RateKind::kDecreasing: return "decreasing";
    case RateKind::kAdaDelayO: return "adadelay_o";
    case RateKind::kAdaDelayOPlus: return "adadelay_o_plus";
    case RateKind::kCardDecreasing: return "card_decreasing";
    case RateKind::kAdaDelayDist: return "adadelay_dist";
  }
  return "?";
}

double lag_estimate_increment(const GradientRecord& rec, double pool_norm_sum) {
  const double n = rec.dual_norm;
  return n * n + 2.0 * n * (pool_norm_sum - rec.used_norm_sum);
}

LearningRatePolicy::LearningRatePolicy(const RateConfig& config)
    : config_(config), previous_eta_(std::numeric_limits<double>::infinity()) {
  switch (config_.kind) {
    case RateKind::kConstant:
      if (!(config_.eta > 0.0)) throw ConfigError("rate: constant rate needs eta > 0");
      break;
    case RateKind::kDecreasing:
      require_tau(config_.tau, "decreasing");
      break;
    case RateKind::kAdaDelayO:
      require_tau(config_.tau, "adadelay_o");
      break;
    case RateKind::kCardDecreasing:
      require_tau(config_.tau, "card_decreasing");
      break;
    case RateKind::kAdaDelayDist:
      require_tau(config_.tau, "adadelay_dist");
      break;
    case RateKind::kAdaDelayOPlus:
      break;
  }
  require_rate_params(config_.R, config_.G);
}

bool LearningRatePolicy::needs_monotone_feedback() const {
  return config_.kind == RateKind::kAdaDelayO || config_.kind == RateKind::kAdaDelayOPlus;
}

void LearningRatePolicy::on_receive(const GradientRecord& rec, const LearnerPool& pool_before) {
  switch (config_.kind) {
    case RateKind::kAdaDelayO:
    case RateKind::kAdaDelayOPlus:
    case RateKind::kAdaDelayDist:
      if (!rec.has_metadata) {
        throw ProtocolError("rate: record for round " + std::to_string(rec.timestamp) +
                            " lacks the relayed usage metadata");
      }
      lag_estimate_ += lag_estimate_increment(rec, pool_before.norm_sum());
      if (config_.kind == RateKind::kAdaDelayOPlus) {
        residual_ -= 1 + 2 * (static_cast<long long>(pool_before.size()) - rec.used_count);
      }
      break;
    case RateKind::kConstant:
    case RateKind::kDecreasing:
    case RateKind::kCardDecreasing:
      break;
  }
}

double LearningRatePolicy::query(Time t, int used_count) {
  const double R = config_.R;
  const double G = config_.G;
  switch (config_.kind) {
    case RateKind::kConstant:
      return config_.eta;
    case RateKind::kDecreasing: {
      const double tau = static_cast<double>(*config_.tau);
      return R / (G * std::sqrt(static_cast<double>(t) * (1.0 + 2.0 * tau)));
    }
    case RateKind::kAdaDelayO: {
      const double tau = static_cast<double>(*config_.tau);
      return R / std::sqrt(lag_estimate_ + G * G * (2.0 * tau * tau + 3.0 * tau + 1.0));
    }
    case RateKind::kAdaDelayOPlus: {
      residual_ += 1 + 2 * (static_cast<long long>(t) - 1 - used_count);
      const double eta =
          std::min(previous_eta_,
                   R / std::sqrt(lag_estimate_ + G * G * static_cast<double>(residual_)));
      previous_eta_ = eta;
      return eta;
    }
    case RateKind::kCardDecreasing: {
      const double tau = static_cast<double>(*config_.tau);
      return R / (G * std::sqrt((1.0 + 2.0 * tau) *
                                (static_cast<double>(used_count) + tau + 1.0)));
    }
    case RateKind::kAdaDelayDist: {
      const double tau = static_cast<double>(*config_.tau);
      const double pad = (2.0 * tau + 1.0) * (2.0 * tau + 1.0);
      return R / std::sqrt(lag_estimate_ + G * G * pad);
    }
  }
  throw ConfigError("rate: unhandled kind");
}

namespace {

// Largest subset of the pool whose every record was produced with strictly
// fewer used records than the subset's own size.
std::vector<Time> defer_fixpoint(const LearnerPool& pool) {
  std::vector<Time> kept = pool.timestamps();
  for (;;) {
    const int card = static_cast<int>(kept.size());
    std::vector<Time> next;
    next.reserve(kept.size());
    for (Time s : kept) {
      if (pool.record(s).used_count < card) next.push_back(s);
    }
    if (static_cast<int>(next.size()) == card) return next;
    kept = std::move(next);
  }
}

}  // namespace

StreamRunResult run_single_agent(const Timeline& timeline, const Geometry& geometry,
                                 const LossSequence& losses, const Vec& comparator,
                                 const StreamRunConfig& config) {
  const int horizon = timeline.horizon();
  const int agents = timeline.num_agents();
  if (losses.horizon() < horizon) {
    throw ConfigError("run: loss sequence shorter than the timeline horizon");
  }
  if (losses.dim() != geometry.dim()) {
    throw ConfigError("run: loss dimension does not match the geometry");
  }
  geometry.require_feasible(comparator, "run comparator");

  LearningRatePolicy probe(config.rate);
  if (probe.needs_monotone_feedback() && agents > 1) {
    throw ConfigError(std::string("run: ") + rate_kind_name(config.rate.kind) +
                      " needs monotone feedback (single-agent timelines only)");
  }
  if (config.defer_usage &&
      (probe.needs_monotone_feedback() || probe.needs_relay_metadata())) {
    throw ConfigError("run: deferred usage is only meaningful for cardinality-keyed "
                      "or oblivious rate schedules");
  }

  std::vector<LearnerPool> pools(static_cast<std::size_t>(agents) + 1);
  std::vector<LearningRatePolicy> policies;
  policies.reserve(static_cast<std::size_t>(agents) + 1);
  for (int i = 0; i <= agents; ++i) policies.emplace_back(config.rate);

  // Per-agent delivery queues ordered by (arrival, origin round).
  std::vector<std::vector<std::pair<Time, Time>>> queue(static_cast<std::size_t>(agents) + 1);
  for (int i = 1; i <= agents; ++i) {
    for (Time s = 1; s <= horizon; ++s) {
      const Time a = timeline.arrival(s, i);
      if (a != kNeverArrives && a <= horizon) queue[static_cast<std::size_t>(i)].push_back({a, s});
    }
    std::sort(queue[static_cast<std::size_t>(i)].begin(), queue[static_cast<std::size_t>(i)].end());
  }
  std::vector<std::size_t> next_delivery(static_cast<std::size_t>(agents) + 1, 0);

  StreamRunResult out;
  out.points.resize(static_cast<std::size_t>(horizon) + 1);
  out.rows.reserve(static_cast<std::size_t>(horizon));
  out.produced.resize(static_cast<std::size_t>(horizon) + 1);
  std::vector<std::vector<Time>> used_series(static_cast<std::size_t>(horizon) + 1);
  out.ledger.inst_actual.assign(static_cast<std::size_t>(horizon) + 1, 0.0);
  out.ledger.cum_actual.assign(static_cast<std::size_t>(horizon) + 1, 0.0);
  out.regularizer_at_comparator = geometry.regularizer(comparator);

  const double gbound = losses.gradient_bound();
  for (Time t = 1; t <= horizon; ++t) {
    for (int i = 1; i <= agents; ++i) {
      auto& q = queue[static_cast<std::size_t>(i)];
      std::size_t& k = next_delivery[static_cast<std::size_t>(i)];
      while (k < q.size() && q[k].first <= t) {
        const GradientRecord& rec = out.produced[static_cast<std::size_t>(q[k].second)];
        policies[static_cast<std::size_t>(i)].on_receive(rec, pools[static_cast<std::size_t>(i)]);
        pools[static_cast<std::size_t>(i)].insert(rec);
        ++k;
      }
    }

    const int agent = timeline.active_agent(t);
    LearnerPool& pool = pools[static_cast<std::size_t>(agent)];
    std::vector<Time> used =
        config.defer_usage ? defer_fixpoint(pool) : pool.timestamps();
    const double used_norm_sum =
        config.defer_usage ? pool.norm_sum(used) : pool.norm_sum();

    LearningRatePolicy& policy = policies[static_cast<std::size_t>(agent)];
    const double eta = policy.query(t, static_cast<int>(used.size()));
    Vec x = dda_predict(geometry, pool, used, eta);

    const Loss& loss = losses.at(t);
    const double value = loss.value(x);
    Vec g = loss.gradient(x);
    const double gnorm = geometry.dual_norm(g);
    if (gnorm > gbound + 1e-9) {
      throw ValidationError("run: gradient norm " + std::to_string(gnorm) +
                            " exceeds the declared bound at round " + std::to_string(t));
    }
    out.max_grad_norm = std::max(out.max_grad_norm, gnorm);

    const double inst = value - loss.value(comparator);
    out.ledger.actual += inst;
    out.ledger.linearized += dot(g, sub(x, comparator));
    out.ledger.inst_actual[static_cast<std::size_t>(t)] = inst;
    out.ledger.cum_actual[static_cast<std::size_t>(t)] = out.ledger.actual;

    GradientRecord rec;
    rec.timestamp = t;
    rec.producer = agent;
    rec.dual_norm = gnorm;
    rec.used_count = static_cast<int>(used.size());
    rec.used_norm_sum = used_norm_sum;
    rec.gradient = std::move(g);
    out.produced[static_cast<std::size_t>(t)] = std::move(rec);

    StepRow row;
    row.t = t;
    row.agent = agent;
    row.eta = eta;
    row.used_count = static_cast<int>(used.size());
    row.used_norm_sum = used_norm_sum;
    row.loss_value = value;
    row.grad_norm = gnorm;
    row.lag_estimate = policy.lag_estimate();
    row.residual = policy.residual();
    out.rows.push_back(row);

    out.points[static_cast<std::size_t>(t)] = std::move(x);
    used_series[static_cast<std::size_t>(t)] = std::move(used);
  }

  std::vector<double> norms(static_cast<std::size_t>(horizon) + 1, 0.0);
  for (Time t = 1; t <= horizon; ++t) {
    norms[static_cast<std::size_t>(t)] = out.produced[static_cast<std::size_t>(t)].dual_norm;
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

  // Post-horizon point once every gradient is in: summed in round order, so
  // it cannot depend on how arrivals interleaved.
  Vec all = zeros(static_cast<std::size_t>(geometry.dim()));
  for (Time s = 1; s <= horizon; ++s) {
    axpy(1.0, out.produced[static_cast<std::size_t>(s)].gradient, all);
  }
  const double last_eta = out.rows.back().eta;
  for (double& v : all) v *= -last_eta;
  out.final_prediction = geometry.mirror(all);

  if (config.record_used_sets) out.used_sets = std::move(used_series);
  return out;
}

double rhs_time_ordered(const StreamRunResult& run) {
  const double h = run.regularizer_at_comparator;
  double rhs = h / run.rows.back().eta;
  double prefix = 0.0;
  for (const StepRow& row : run.rows) {
    const double n = row.grad_norm;
    rhs += 0.5 * row.eta * (n * n + 2.0 * n * (prefix - row.used_norm_sum));
    prefix += n;
  }
  return rhs;
}

double rhs_along_order(const StreamRunResult& run, const std::vector<Time>& order) {
  const std::size_t horizon = run.rows.size();
  if (order.size() != horizon) {
    throw ValidationError("rhs_along_order: ordering must cover every round");
  }
  const double h = run.regularizer_at_comparator;
  double rhs = h / run.rows[static_cast<std::size_t>(order.back() - 1)].eta;
  double prefix = 0.0;
  for (Time t : order) {
    const StepRow& row = run.rows[static_cast<std::size_t>(t - 1)];
    const double n = row.grad_norm;
    rhs += 0.5 * row.eta * (n * n + 2.0 * n * (prefix - row.used_norm_sum));
    prefix += n;
  }
  return rhs;
}

std::vector<Time> rate_key_order(const StreamRunResult& run) {
  std::vector<Time> order(run.rows.size());
  std::iota(order.begin(), order.end(), 1);
  std::stable_sort(order.begin(), order.end(), [&](Time a, Time b) {
    const StepRow& ra = run.rows[static_cast<std::size_t>(a - 1)];
    const StepRow& rb = run.rows[static_cast<std::size_t>(b - 1)];
    const double ka = 1.0 / (ra.eta * ra.eta);
    const double kb = 1.0 / (rb.eta * rb.eta);
    if (ka != kb) return ka < kb;
    if (ra.used_count != rb.used_count) return ra.used_count < rb.used_count;
    return a < b;
  });
  return order;
}

}  // namespace delopt
