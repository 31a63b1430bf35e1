#include "delopt/schedule.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "delopt/errors.hpp"
#include "delopt/rng.hpp"

namespace delopt {

DelayModel DelayModel::constant(int tau) {
  if (tau < 0) throw ValidationError("delay model: constant delay must be nonnegative");
  DelayModel m;
  m.kind = Kind::kConstant;
  m.tau = tau;
  return m;
}

DelayModel DelayModel::iid_geometric(double p, int cap) {
  if (!(p > 0.0) || p > 1.0) {
    throw ValidationError("delay model: geometric parameter must lie in (0, 1]");
  }
  if (cap < -1) throw ValidationError("delay model: cap must be -1 (none) or nonnegative");
  DelayModel m;
  m.kind = Kind::kIidGeometric;
  m.p = p;
  m.cap = cap;
  return m;
}

DelayModel DelayModel::trace(std::string text) {
  DelayModel m;
  m.kind = Kind::kTrace;
  m.trace_text = std::move(text);
  return m;
}

Timeline::Timeline(int horizon, int num_agents) : horizon_(horizon), num_agents_(num_agents) {
  if (horizon < 1) throw ValidationError("timeline: horizon must be positive");
  if (num_agents < 1) throw ValidationError("timeline: need at least one agent");
  active_.assign(static_cast<std::size_t>(horizon) + 1, 1);
  arrival_.assign(static_cast<std::size_t>(horizon) + 1,
                  std::vector<Time>(static_cast<std::size_t>(num_agents) + 1, kNeverArrives));
}

void Timeline::check_time(Time t, const char* where) const {
  if (t < 1 || t > horizon_) {
    throw ValidationError(std::string(where) + ": round " + std::to_string(t) +
                          " outside 1.." + std::to_string(horizon_));
  }
}

void Timeline::check_agent(int agent, const char* where) const {
  if (agent < 1 || agent > num_agents_) {
    throw ValidationError(std::string(where) + ": agent " + std::to_string(agent) +
                          " outside 1.." + std::to_string(num_agents_));
  }
}

void Timeline::set_active(Time t, int agent) {
  check_time(t, "set_active");
  check_agent(agent, "set_active");
  active_[static_cast<std::size_t>(t)] = agent;
}

int Timeline::active_agent(Time t) const {
  check_time(t, "active_agent");
  return active_[static_cast<std::size_t>(t)];
}

void Timeline::set_arrival(Time s, int agent, Time when) {
  check_time(s, "set_arrival");
  check_agent(agent, "set_arrival");
  if (when != kNeverArrives && when < s + 1) {
    throw ValidationError("set_arrival: feedback of round " + std::to_string(s) +
                          " cannot arrive before round " + std::to_string(s + 1));
  }
  arrival_[static_cast<std::size_t>(s)][static_cast<std::size_t>(agent)] = when;
}

Time Timeline::arrival(Time s, int agent) const {
  check_time(s, "arrival");
  check_agent(agent, "arrival");
  return arrival_[static_cast<std::size_t>(s)][static_cast<std::size_t>(agent)];
}

std::vector<Time> Timeline::available_set(Time t, int agent) const {
  check_time(t, "available_set");
  check_agent(agent, "available_set");
  std::vector<Time> s;
  for (Time r = 1; r < t; ++r) {
    if (arrival_[static_cast<std::size_t>(r)][static_cast<std::size_t>(agent)] <= t) {
      s.push_back(r);
    }
  }
  return s;
}

std::vector<Time> Timeline::available_set(Time t) const {
  return available_set(t, active_agent(t));
}

std::vector<Time> Timeline::unavailable_set(Time t) const {
  const int agent = active_agent(t);
  std::vector<Time> u;
  for (Time r = 1; r < t; ++r) {
    if (arrival_[static_cast<std::size_t>(r)][static_cast<std::size_t>(agent)] > t) {
      u.push_back(r);
    }
  }
  return u;
}

bool Timeline::has_monotone_feedback() const {
  std::vector<Time> prev;
  for (Time t = 1; t <= horizon_; ++t) {
    std::vector<Time> cur = available_set(t);
    if (!std::includes(cur.begin(), cur.end(), prev.begin(), prev.end())) return false;
    prev = std::move(cur);
  }
  return true;
}

std::string Timeline::to_trace_rows() const {
  std::ostringstream out;
  for (Time s = 1; s <= horizon_; ++s) {
    for (int i = 1; i <= num_agents_; ++i) {
      const Time a = arrival(s, i);
      out << s << ' ' << producer(s) << ' ' << i << ' ';
      if (a == kNeverArrives) {
        out << "inf";
      } else {
        out << a;
      }
      out << '\n';
    }
  }
  return out.str();
}

namespace {

std::vector<int> resolve_activation(int horizon, int num_agents,
                                    const std::vector<int>& activation) {
  if (activation.empty()) return std::vector<int>(static_cast<std::size_t>(horizon), 1);
  if (static_cast<int>(activation.size()) != horizon) {
    throw ValidationError("timeline: activation length " + std::to_string(activation.size()) +
                          " does not match horizon " + std::to_string(horizon));
  }
  for (int a : activation) {
    if (a < 1 || a > num_agents) {
      throw ValidationError("timeline: activation names agent " + std::to_string(a) +
                            " outside 1.." + std::to_string(num_agents));
    }
  }
  return activation;
}

}  // namespace

Timeline build_timeline(const DelayModel& model, int horizon, int num_agents,
                        const std::vector<int>& activation, std::uint64_t seed) {
  if (model.kind == DelayModel::Kind::kTrace) {
    return parse_timeline_trace(model.trace_text, horizon, num_agents, activation);
  }
  const std::vector<int> act = resolve_activation(horizon, num_agents, activation);
  Timeline tl(horizon, num_agents);
  for (Time t = 1; t <= horizon; ++t) tl.set_active(t, act[static_cast<std::size_t>(t - 1)]);

  SplitMix64 rng(seed);
  const double log_q = model.p < 1.0 ? std::log1p(-model.p) : 0.0;
  for (Time s = 1; s <= horizon; ++s) {
    for (int i = 1; i <= num_agents; ++i) {
      int delay = 0;
      if (model.kind == DelayModel::Kind::kConstant) {
        delay = model.tau;
      } else {
        if (model.p < 1.0) {
          const double u = rng.next_double();
          delay = static_cast<int>(std::min(std::log1p(-u) / log_q, 1.0e8));
        }
        if (model.cap >= 0) delay = std::min(delay, model.cap);
      }
      tl.set_arrival(s, i, s + 1 + delay);
    }
  }
  return tl;
}

Timeline parse_timeline_trace(const std::string& text, int horizon, int num_agents,
                              const std::vector<int>& activation) {
  const std::vector<int> act = resolve_activation(horizon, num_agents, activation);
  Timeline tl(horizon, num_agents);
  for (Time t = 1; t <= horizon; ++t) tl.set_active(t, act[static_cast<std::size_t>(t - 1)]);

  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  std::set<std::pair<Time, int>> seen;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream row(line);
    long long origin, producer, consumer;
    std::string arrival_tok;
    if (!(row >> origin)) continue;  // blank line
    if (!(row >> producer >> consumer >> arrival_tok)) {
      throw ValidationError("delay trace: line " + std::to_string(lineno) +
                            ": expected 'origin producer consumer arrival'");
    }
    if (origin < 1 || origin > horizon) {
      throw ValidationError("delay trace: line " + std::to_string(lineno) +
                            ": origin round outside 1.." + std::to_string(horizon));
    }
    if (producer != tl.producer(static_cast<Time>(origin))) {
      throw ValidationError("delay trace: line " + std::to_string(lineno) +
                            ": producer does not match the agent active at round " +
                            std::to_string(origin));
    }
    if (consumer < 1 || consumer > num_agents) {
      throw ValidationError("delay trace: line " + std::to_string(lineno) +
                            ": consumer outside 1.." + std::to_string(num_agents));
    }
    if (!seen.insert({static_cast<Time>(origin), static_cast<int>(consumer)}).second) {
      throw ValidationError("delay trace: line " + std::to_string(lineno) +
                            ": duplicate (origin, consumer) row");
    }
    Time when;
    if (arrival_tok == "inf") {
      when = kNeverArrives;
    } else {
      try {
        when = static_cast<Time>(std::stoll(arrival_tok));
      } catch (const std::exception&) {
        throw ValidationError("delay trace: line " + std::to_string(lineno) +
                              ": bad arrival '" + arrival_tok + "'");
      }
      if (when < origin + 1) {
        throw ValidationError("delay trace: line " + std::to_string(lineno) +
                              ": arrival precedes origin + 1");
      }
    }
    tl.set_arrival(static_cast<Time>(origin), static_cast<int>(consumer), when);
  }
  // Unlisted (origin, consumer) pairs keep the default: never arrives.
  return tl;
}

DelayStats delay_stats_from_sets(const std::vector<std::vector<Time>>& available,
                                 const std::vector<double>& dual_norms, bool lost_feedback) {
  const int horizon = static_cast<int>(available.size()) - 1;
  if (horizon < 1) throw ValidationError("delay stats: empty availability series");
  if (static_cast<int>(dual_norms.size()) != horizon + 1) {
    throw ValidationError("delay stats: dual norm series must cover rounds 1..T");
  }
  DelayStats st;
  st.lost_feedback = lost_feedback;
  st.cumulative_unavailability.assign(static_cast<std::size_t>(horizon) + 1, 0);
  st.lag.assign(static_cast<std::size_t>(horizon) + 1, 0.0);
  double norm_prefix = 0.0;  // sum of dual norms over rounds 1..t-1
  long long d = 0;
  double lag = 0.0;
  for (Time t = 1; t <= horizon; ++t) {
    const std::vector<Time>& s_t = available[static_cast<std::size_t>(t)];
    double avail_norm_sum = 0.0;
    for (Time s : s_t) avail_norm_sum += dual_norms[static_cast<std::size_t>(s)];
    const int unavailable = (t - 1) - static_cast<int>(s_t.size());
    d += unavailable;
    st.cumulative_unavailability[static_cast<std::size_t>(t)] = d;
    st.max_unavailability = std::max(st.max_unavailability, unavailable);
    // Oldest missing round determines the delay witness at t.
    std::size_t k = 0;
    for (Time s = 1; s < t; ++s) {
      if (k < s_t.size() && s_t[k] == s) {
        ++k;
        continue;
      }
      st.max_delay = std::max(st.max_delay, t - s);
      break;
    }
    const double nt = dual_norms[static_cast<std::size_t>(t)];
    lag += nt * nt + 2.0 * nt * (norm_prefix - avail_norm_sum);
    st.lag[static_cast<std::size_t>(t)] = lag;
    norm_prefix += nt;
  }
  if (lost_feedback) st.max_delay = horizon - 1;
  return st;
}

DelayStats delay_stats(const Timeline& timeline, const std::vector<double>& dual_norms) {
  const int horizon = timeline.horizon();
  std::vector<std::vector<Time>> available(static_cast<std::size_t>(horizon) + 1);
  for (Time t = 1; t <= horizon; ++t) {
    available[static_cast<std::size_t>(t)] = timeline.available_set(t);
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
  return delay_stats_from_sets(available, dual_norms, lost);
}

std::vector<Time> arrival_order(const Timeline& timeline, int agent) {
  std::vector<Time> order(static_cast<std::size_t>(timeline.horizon()));
  std::iota(order.begin(), order.end(), 1);
  std::stable_sort(order.begin(), order.end(), [&](Time a, Time b) {
    const Time aa = timeline.arrival(a, agent);
    const Time ab = timeline.arrival(b, agent);
    if (aa != ab) return aa < ab;
    return a < b;
  });
  return order;
}

std::vector<Time> received_before(const Timeline& timeline, int agent, Time s) {
  const std::vector<Time> order = arrival_order(timeline, agent);
  std::vector<Time> out;
  for (Time r : order) {
    if (r == s) break;
    out.push_back(r);
  }
  std::sort(out.begin(), out.end());
  return out;
}

bool is_faithful(const std::vector<Time>& order, const Timeline& timeline) {
  const int horizon = timeline.horizon();
  if (static_cast<int>(order.size()) != horizon) {
    throw ValidationError("is_faithful: ordering must cover rounds 1..T");
  }
  std::vector<int> pos(static_cast<std::size_t>(horizon) + 1, 0);
  for (int k = 0; k < horizon; ++k) {
    const Time t = order[static_cast<std::size_t>(k)];
    if (t < 1 || t > horizon || pos[static_cast<std::size_t>(t)] != 0) {
      throw ValidationError("is_faithful: ordering is not a permutation of 1..T");
    }
    pos[static_cast<std::size_t>(t)] = k + 1;
  }
  for (Time t = 1; t <= horizon; ++t) {
    for (Time s : timeline.available_set(t)) {
      if (pos[static_cast<std::size_t>(s)] >= pos[static_cast<std::size_t>(t)]) return false;
    }
  }
  return true;
}

std::set<std::pair<Time, Time>> backlog_pairs(const Timeline& timeline, Time t,
                                              BacklogVariant variant) {
  if (variant == BacklogVariant::kSingleStream && timeline.num_agents() != 1) {
    throw ConfigError("backlog_pairs: single-stream variant requires a single-agent timeline");
  }
  const int agent =
      variant == BacklogVariant::kSingleStream ? 1 : timeline.active_agent(t);
  const std::vector<Time> order = arrival_order(timeline, agent);
  std::vector<int> pos(static_cast<std::size_t>(timeline.horizon()) + 1, 0);
  for (int k = 0; k < static_cast<int>(order.size()); ++k) {
    pos[static_cast<std::size_t>(order[static_cast<std::size_t>(k)])] = k + 1;
  }
  std::set<std::pair<Time, Time>> pairs;
  for (Time s : timeline.available_set(t)) {
    const std::vector<Time> used = timeline.available_set(s);
    // r received (at `agent`) before round s's feedback but unused by round s
    for (Time r : order) {
      if (r == s) break;
      if (!std::binary_search(used.begin(), used.end(), r)) {
        pairs.insert({std::min(s, r), std::max(s, r)});
      }
    }
  }
  return pairs;
}

long long rho(const Timeline& timeline, Time t) {
  if (timeline.num_agents() != 1) {
    throw ConfigError("rho: defined for single-agent timelines");
  }
  long long d = 0;
  for (Time r = 1; r <= t; ++r) {
    d += (r - 1) - static_cast<long long>(timeline.available_set(r).size());
  }
  const long long card = static_cast<long long>(timeline.available_set(t).size());
  const long long backlog =
      static_cast<long long>(backlog_pairs(timeline, t, BacklogVariant::kSingleStream).size());
  return t + 2 * d - card - 2 * backlog;
}

bool cardinality_in_order(const Timeline& timeline) {
  for (Time t = 1; t <= timeline.horizon(); ++t) {
    const std::size_t card_t = timeline.available_set(t).size();
    for (Time s : timeline.available_set(t)) {
      if (timeline.available_set(s).size() >= card_t) return false;
    }
  }
  return true;
}

bool in_order_reception(const Timeline& timeline) {
  for (int i = 1; i <= timeline.num_agents(); ++i) {
    const std::vector<Time> order = arrival_order(timeline, i);
    std::vector<int> pos(static_cast<std::size_t>(timeline.horizon()) + 1, 0);
    for (int k = 0; k < static_cast<int>(order.size()); ++k) {
      pos[static_cast<std::size_t>(order[static_cast<std::size_t>(k)])] = k + 1;
    }
    for (Time t = 1; t <= timeline.horizon(); ++t) {
      if (timeline.arrival(t, i) == kNeverArrives) continue;
      for (Time s : timeline.available_set(t)) {
        if (pos[static_cast<std::size_t>(s)] >= pos[static_cast<std::size_t>(t)]) return false;
      }
    }
  }
  return true;
}

}  // namespace delopt
