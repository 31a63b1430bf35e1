#include "delopt/decentralized.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "delopt/errors.hpp"

namespace delopt {

void NetworkTrace::validate() const {
  if (horizon < 1) throw ValidationError("network trace: horizon must be positive");
  if (num_agents < 1) throw ValidationError("network trace: need at least one agent");
  if (static_cast<int>(active.size()) != horizon + 1) {
    throw ValidationError("network trace: active rounds must cover 1..T");
  }
  for (int t = 1; t <= horizon; ++t) {
    const auto& slot = active[static_cast<std::size_t>(t)];
    if (slot.empty()) {
      throw ValidationError("network trace: round " + std::to_string(t) + " has no active agent");
    }
    std::vector<int> sorted(slot);
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
      throw ValidationError("network trace: round " + std::to_string(t) +
                            " lists an agent twice");
    }
    for (int a : slot) {
      if (a < 1 || a > num_agents) {
        throw ValidationError("network trace: round " + std::to_string(t) + " names agent " +
                              std::to_string(a) + " outside 1.." + std::to_string(num_agents));
      }
    }
  }
  if (static_cast<int>(latency.size()) != num_agents + 1) {
    throw ValidationError("network trace: latency table must cover every producer");
  }
  for (int i = 1; i <= num_agents; ++i) {
    if (static_cast<int>(latency[static_cast<std::size_t>(i)].size()) != num_agents + 1) {
      throw ValidationError("network trace: latency table must cover every consumer");
    }
    for (int j = 1; j <= num_agents; ++j) {
      const int l = latency[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
      if (l < kNeverDelivered) {
        throw ValidationError("network trace: latency must be nonnegative or never (-1)");
      }
    }
  }
}

int NetworkTrace::total_plays() const {
  int m = 0;
  for (int t = 1; t <= horizon; ++t) m += static_cast<int>(active[static_cast<std::size_t>(t)].size());
  return m;
}

int NetworkTrace::max_active() const {
  int n = 0;
  for (int t = 1; t <= horizon; ++t) {
    n = std::max(n, static_cast<int>(active[static_cast<std::size_t>(t)].size()));
  }
  return n;
}

double NetworkTrace::rms_active() const {
  double s = 0.0;
  for (int t = 1; t <= horizon; ++t) {
    const double n = static_cast<double>(active[static_cast<std::size_t>(t)].size());
    s += n * n;
  }
  return std::sqrt(s / static_cast<double>(horizon));
}

int NetworkTrace::flat_index(int t, int position) const {
  if (t < 1 || t > horizon) throw ValidationError("flat_index: round out of range");
  const int n_t = static_cast<int>(active[static_cast<std::size_t>(t)].size());
  if (position < 1 || position > n_t) throw ValidationError("flat_index: position out of range");
  int base = 0;
  for (int u = 1; u < t; ++u) base += static_cast<int>(active[static_cast<std::size_t>(u)].size());
  return base + position;
}

int NetworkTrace::round_of_flat(int mu) const {
  int base = 0;
  for (int t = 1; t <= horizon; ++t) {
    const int n_t = static_cast<int>(active[static_cast<std::size_t>(t)].size());
    if (mu <= base + n_t) return t;
    base += n_t;
  }
  throw ValidationError("round_of_flat: index out of range");
}

int NetworkTrace::position_of_flat(int mu) const {
  int base = 0;
  for (int t = 1; t <= horizon; ++t) {
    const int n_t = static_cast<int>(active[static_cast<std::size_t>(t)].size());
    if (mu <= base + n_t) return mu - base;
    base += n_t;
  }
  throw ValidationError("position_of_flat: index out of range");
}

NetworkTrace NetworkTrace::parse(const std::string& active_rows, const std::string& latency_rows,
                                 int num_agents) {
  NetworkTrace trace;
  trace.num_agents = num_agents;

  std::vector<std::vector<int>> slots(1);  // index 0 unused
  {
    std::istringstream in(active_rows);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      const auto hash = line.find('#');
      if (hash != std::string::npos) line.erase(hash);
      std::istringstream row(line);
      long long t, agent;
      if (!(row >> t)) continue;
      if (!(row >> agent)) {
        throw ValidationError("network trace: line " + std::to_string(lineno) +
                              ": expected 'round agent'");
      }
      if (t < 1) {
        throw ValidationError("network trace: line " + std::to_string(lineno) +
                              ": round must be positive");
      }
      if (static_cast<std::size_t>(t) >= slots.size()) slots.resize(static_cast<std::size_t>(t) + 1);
      slots[static_cast<std::size_t>(t)].push_back(static_cast<int>(agent));
    }
  }
  trace.horizon = static_cast<int>(slots.size()) - 1;
  trace.active = std::move(slots);

  trace.latency.assign(static_cast<std::size_t>(num_agents) + 1,
                       std::vector<int>(static_cast<std::size_t>(num_agents) + 1, kNeverDelivered));
  {
    std::istringstream in(latency_rows);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      const auto hash = line.find('#');
      if (hash != std::string::npos) line.erase(hash);
      std::istringstream row(line);
      long long producer, consumer;
      std::string delay_tok;
      if (!(row >> producer)) continue;
      if (!(row >> consumer >> delay_tok)) {
        throw ValidationError("latency table: line " + std::to_string(lineno) +
                              ": expected 'producer consumer delay'");
      }
      if (producer < 1 || producer > num_agents || consumer < 1 || consumer > num_agents) {
        throw ValidationError("latency table: line " + std::to_string(lineno) +
                              ": agent outside 1.." + std::to_string(num_agents));
      }
      int delay;
      if (delay_tok == "inf") {
        delay = kNeverDelivered;
      } else {
        try {
          delay = static_cast<int>(std::stoll(delay_tok));
        } catch (const std::exception&) {
          throw ValidationError("latency table: line " + std::to_string(lineno) +
                                ": bad delay '" + delay_tok + "'");
        }
        if (delay < 0) {
          throw ValidationError("latency table: line " + std::to_string(lineno) +
                                ": delay must be nonnegative or inf");
        }
      }
      trace.latency[static_cast<std::size_t>(producer)][static_cast<std::size_t>(consumer)] = delay;
    }
  }
  trace.validate();
  return trace;
}

std::string NetworkTrace::active_to_rows() const {
  std::ostringstream out;
  for (int t = 1; t <= horizon; ++t) {
    for (int a : active[static_cast<std::size_t>(t)]) out << t << ' ' << a << '\n';
  }
  return out.str();
}

std::string NetworkTrace::latency_to_rows() const {
  std::ostringstream out;
  for (int i = 1; i <= num_agents; ++i) {
    for (int j = 1; j <= num_agents; ++j) {
      const int l = latency[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
      out << i << ' ' << j << ' ';
      if (l == kNeverDelivered) {
        out << "inf";
      } else {
        out << l;
      }
      out << '\n';
    }
  }
  return out.str();
}

Timeline flatten_to_timeline(const NetworkTrace& trace) {
  trace.validate();
  const int m = trace.total_plays();
  Timeline tl(m, trace.num_agents);

  std::vector<int> slot_base(static_cast<std::size_t>(trace.horizon) + 2, 0);
  for (int t = 1; t <= trace.horizon + 1; ++t) {
    slot_base[static_cast<std::size_t>(t)] =
        slot_base[static_cast<std::size_t>(t - 1)] +
        (t <= trace.horizon ? static_cast<int>(trace.active[static_cast<std::size_t>(t)].size())
                            : 0);
  }

  int mu = 0;
  for (int t = 1; t <= trace.horizon; ++t) {
    for (int a : trace.active[static_cast<std::size_t>(t)]) {
      ++mu;
      tl.set_active(mu, a);
      for (int c = 1; c <= trace.num_agents; ++c) {
        const int l = trace.latency[static_cast<std::size_t>(a)][static_cast<std::size_t>(c)];
        if (l == kNeverDelivered) continue;  // default: never arrives
        const int arrival_round = t + 1 + l;
        if (arrival_round > trace.horizon) continue;  // beyond horizon: never used
        // First flattened index of the arrival round; feedback is available
        // to every position of that round and later.
        tl.set_arrival(mu, c, slot_base[static_cast<std::size_t>(arrival_round - 1)] + 1);
      }
    }
  }
  return tl;
}

NetworkDelayStats network_delay_stats(const NetworkTrace& trace) {
  trace.validate();
  NetworkDelayStats st;
  // last round each agent appears in
  std::vector<int> last_active(static_cast<std::size_t>(trace.num_agents) + 1, 0);
  for (int t = 1; t <= trace.horizon; ++t) {
    for (int a : trace.active[static_cast<std::size_t>(t)]) {
      last_active[static_cast<std::size_t>(a)] = t;
    }
  }
  for (int s = 1; s <= trace.horizon; ++s) {
    for (int j : trace.active[static_cast<std::size_t>(s)]) {
      for (int i = 1; i <= trace.num_agents; ++i) {
        if (last_active[static_cast<std::size_t>(i)] <= s) continue;
        const int l = trace.latency[static_cast<std::size_t>(j)][static_cast<std::size_t>(i)];
        if (l == kNeverDelivered) {
          st.lost_feedback = true;
          continue;
        }
        // Feedback from round s reaches i for rounds >= s + 1 + l; it is
        // missing at i's predictions in rounds s+1 .. min(s+l, last activity).
        const int last_missing = std::min(s + l, last_active[static_cast<std::size_t>(i)]);
        for (int t = last_missing; t > s; --t) {
          bool plays = false;
          for (int a : trace.active[static_cast<std::size_t>(t)]) {
            if (a == i) {
              plays = true;
              break;
            }
          }
          if (plays) {
            st.max_delay = std::max(st.max_delay, t - s);
            break;
          }
        }
      }
    }
  }
  if (st.lost_feedback) st.max_delay = trace.horizon - 1;
  return st;
}

double lr_global_fixed(double R, double G, double rms_active, int tau, int horizon) {
  if (!(R > 0.0) || !(G > 0.0) || !(rms_active > 0.0) || tau < 0 || horizon < 1) {
    throw ConfigError("lr_global_fixed: need positive R, G, rms and nonnegative tau");
  }
  return R / (G * rms_active *
              std::sqrt((2.0 * static_cast<double>(tau) + 1.0) * static_cast<double>(horizon)));
}

double lr_global_card(double R, double G, int tau, int max_active, int avail_count) {
  if (!(R > 0.0) || !(G > 0.0) || tau < 0 || max_active < 1 || avail_count < 0) {
    throw ConfigError("lr_global_card: bad parameters");
  }
  const double t5 = 5.0 * static_cast<double>(tau) + 3.0;
  const double inner = (static_cast<double>(avail_count) +
                        (static_cast<double>(tau) + 1.0) * static_cast<double>(max_active)) *
                       static_cast<double>(max_active);
  return R / (G * std::sqrt(t5 * inner));
}

NetworkRateConfig NetworkRateConfig::fixed(double eta) {
  if (!(eta > 0.0) || !std::isfinite(eta)) {
    throw ConfigError("network rate: fixed rate must name a positive eta");
  }
  NetworkRateConfig c;
  c.kind = NetworkRateKind::kFixed;
  c.eta = eta;
  return c;
}

NetworkRateConfig NetworkRateConfig::global_card(double R, double G, int tau) {
  if (!(R > 0.0) || !(G > 0.0) || tau < 0) throw ConfigError("network rate: bad parameters");
  NetworkRateConfig c;
  c.kind = NetworkRateKind::kGlobalCard;
  c.R = R;
  c.G = G;
  c.tau = tau;
  return c;
}

NetworkRateConfig NetworkRateConfig::dist(double R, double G, int tau) {
  if (!(R > 0.0) || !(G > 0.0) || tau < 0) throw ConfigError("network rate: bad parameters");
  NetworkRateConfig c;
  c.kind = NetworkRateKind::kDist;
  c.R = R;
  c.G = G;
  c.tau = tau;
  return c;
}

NetworkRunResult run_network(const NetworkTrace& trace, const Geometry& geometry,
                             const LossSequence& losses, const Vec& comparator,
                             const NetworkRunConfig& config) {
  trace.validate();
  const int horizon = trace.horizon;
  const int agents = trace.num_agents;
  const int total = trace.total_plays();
  if (losses.horizon() < total) {
    throw ConfigError("network run: need one loss per play (flattened)");
  }
  if (losses.dim() != geometry.dim()) {
    throw ConfigError("network run: loss dimension does not match the geometry");
  }
  geometry.require_feasible(comparator, "network run comparator");
  if (config.reference_position < 1) {
    throw ConfigError("network run: reference position must be >= 1");
  }
  for (int t = 1; t <= horizon; ++t) {
    if (config.reference_position >
        static_cast<int>(trace.active[static_cast<std::size_t>(t)].size())) {
      throw ConfigError("network run: reference position exceeds the active count at round " +
                        std::to_string(t));
    }
  }

  const int max_active = trace.max_active();
  std::vector<LearnerPool> pools(static_cast<std::size_t>(agents) + 1);
  // Per-agent relayed-lag state for the dist rate.
  std::vector<LearningRatePolicy> dist_state;
  if (config.rate.kind == NetworkRateKind::kDist) {
    for (int i = 0; i <= agents; ++i) {
      dist_state.emplace_back(
          RateConfig::adadelay_dist(config.rate.R, config.rate.G, config.rate.tau));
    }
  }

  // Delivery schedule per consumer: (arrival round, flat index, producer).
  struct Delivery {
    int arrival = 0;
    int flat = 0;
  };
  std::vector<std::vector<Delivery>> schedule(static_cast<std::size_t>(agents) + 1);
  {
    int mu = 0;
    for (int t = 1; t <= horizon; ++t) {
      for (int a : trace.active[static_cast<std::size_t>(t)]) {
        ++mu;
        for (int c = 1; c <= agents; ++c) {
          const int l = trace.latency[static_cast<std::size_t>(a)][static_cast<std::size_t>(c)];
          if (l == kNeverDelivered) continue;
          const int arrival = t + 1 + l;
          if (arrival > horizon) continue;
          schedule[static_cast<std::size_t>(c)].push_back({arrival, mu});
        }
      }
    }
    for (int c = 1; c <= agents; ++c) {
      std::sort(schedule[static_cast<std::size_t>(c)].begin(),
                schedule[static_cast<std::size_t>(c)].end(),
                [](const Delivery& x, const Delivery& y) {
                  if (x.arrival != y.arrival) return x.arrival < y.arrival;
                  return x.flat < y.flat;
                });
    }
  }
  std::vector<std::size_t> next_delivery(static_cast<std::size_t>(agents) + 1, 0);

  NetworkRunResult out;
  out.plays.resize(static_cast<std::size_t>(horizon) + 1);
  out.rows.reserve(static_cast<std::size_t>(total));
  out.rms_active = trace.rms_active();
  out.max_active = max_active;
  out.total_plays = total;
  out.regularizer_at_comparator = geometry.regularizer(comparator);
  out.stats = network_delay_stats(trace);

  std::vector<GradientRecord> produced(static_cast<std::size_t>(total) + 1);
  const double gbound = losses.gradient_bound();

  int mu = 0;
  for (int t = 1; t <= horizon; ++t) {
    for (int c = 1; c <= agents; ++c) {
      auto& sched = schedule[static_cast<std::size_t>(c)];
      std::size_t& k = next_delivery[static_cast<std::size_t>(c)];
      while (k < sched.size() && sched[k].arrival <= t) {
        const GradientRecord& rec = produced[static_cast<std::size_t>(sched[k].flat)];
        if (config.rate.kind == NetworkRateKind::kDist) {
          dist_state[static_cast<std::size_t>(c)].on_receive(rec, pools[static_cast<std::size_t>(c)]);
        }
        pools[static_cast<std::size_t>(c)].insert(rec);
        ++k;
      }
    }

    const auto& slot = trace.active[static_cast<std::size_t>(t)];
    out.plays[static_cast<std::size_t>(t)].resize(slot.size());
    for (int pos = 1; pos <= static_cast<int>(slot.size()); ++pos) {
      ++mu;
      const int agent = slot[static_cast<std::size_t>(pos - 1)];
      LearnerPool& pool = pools[static_cast<std::size_t>(agent)];
      std::vector<Time> used = pool.timestamps();
      double used_norm_sum = pool.norm_sum();
      if (config.rate.kind == NetworkRateKind::kGlobalCard) {
        if (config.defer_usage) {
          // Keep only records produced with strictly smaller usage than the
          // kept set's own size (greatest such subset).
          for (;;) {
            const int card = static_cast<int>(used.size());
            std::vector<Time> next_used;
            next_used.reserve(used.size());
            for (Time s : used) {
              if (pool.record(s).used_count < card) next_used.push_back(s);
            }
            if (static_cast<int>(next_used.size()) == card) break;
            used = std::move(next_used);
          }
          used_norm_sum = pool.norm_sum(used);
        } else {
          for (Time s : used) {
            if (pool.record(s).used_count >= static_cast<int>(used.size())) {
              throw ConfigError(
                  "network run: availability-keyed rate needs usage counts to grow along "
                  "deliveries (round " + std::to_string(t) + ", agent " +
                  std::to_string(agent) + "); enable deferred usage or fix the trace");
            }
          }
        }
      }

      double eta = 0.0;
      double lag = 0.0;
      switch (config.rate.kind) {
        case NetworkRateKind::kFixed:
          eta = config.rate.eta;
          break;
        case NetworkRateKind::kGlobalCard:
          eta = lr_global_card(config.rate.R, config.rate.G, config.rate.tau, max_active,
                               static_cast<int>(used.size()));
          break;
        case NetworkRateKind::kDist:
          eta = dist_state[static_cast<std::size_t>(agent)].query(mu, static_cast<int>(used.size()));
          lag = dist_state[static_cast<std::size_t>(agent)].lag_estimate();
          out.max_lag_estimate = std::max(out.max_lag_estimate, lag);
          break;
      }

      Vec x = dda_predict(geometry, pool, used, eta);
      const Loss& loss = losses.at(mu);
      const double value = loss.value(x);
      Vec g = loss.gradient(x);
      const double gnorm = geometry.dual_norm(g);
      if (gnorm > gbound + 1e-9) {
        throw ValidationError("network run: gradient norm exceeds the declared bound at round " +
                              std::to_string(t));
      }

      GradientRecord rec;
      rec.timestamp = mu;
      rec.producer = agent;
      rec.dual_norm = gnorm;
      rec.used_count = static_cast<int>(used.size());
      rec.used_norm_sum = used_norm_sum;
      rec.gradient = g;
      produced[static_cast<std::size_t>(mu)] = std::move(rec);

      NetworkStepRow row;
      row.flat = mu;
      row.round = t;
      row.position = pos;
      row.agent = agent;
      row.eta = eta;
      row.used_count = static_cast<int>(used.size());
      row.loss_value = value;
      row.grad_norm = gnorm;
      row.lag_estimate = lag;
      out.rows.push_back(row);

      out.plays[static_cast<std::size_t>(t)][static_cast<std::size_t>(pos - 1)] = std::move(x);
    }
  }

  out.regret = network_regrets(trace, losses, out.plays, comparator, geometry,
                               losses.gradient_bound(), config.reference_position);
  return out;
}

NetworkRegret network_regrets(const NetworkTrace& trace, const LossSequence& losses,
                              const std::vector<std::vector<Vec>>& plays, const Vec& comparator,
                              const Geometry& geometry, double lipschitz_bound,
                              int reference_position) {
  NetworkRegret r;
  int mu = 0;
  for (int t = 1; t <= trace.horizon; ++t) {
    const auto& slot_plays = plays[static_cast<std::size_t>(t)];
    const Vec& ref = slot_plays[static_cast<std::size_t>(reference_position - 1)];
    for (int pos = 1; pos <= static_cast<int>(slot_plays.size()); ++pos) {
      ++mu;
      const Loss& loss = losses.at(mu);
      const Vec& own = slot_plays[static_cast<std::size_t>(pos - 1)];
      const double at_comparator = loss.value(comparator);
      r.effective += loss.value(own) - at_comparator;
      r.collective += loss.value(ref) - at_comparator;
      r.discrepancy += lipschitz_bound * geometry.primal_norm(sub(own, ref));
    }
  }
  return r;
}

}  // namespace delopt
