#include "delopt/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>
#include <stdexcept>

#include "delopt/errors.hpp"

namespace delopt {

namespace {

std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

struct ParseCtx {
  std::string name;
  int line = 0;
};

[[noreturn]] void parse_fail(const ParseCtx& ctx, const std::string& msg) {
  throw ConfigError(ctx.name + ":" + std::to_string(ctx.line) + ": " + msg);
}

double to_double(const ParseCtx& ctx, const std::string& field, const std::string& value) {
  try {
    std::size_t used = 0;
    double v = std::stod(value, &used);
    if (used != value.size()) throw std::invalid_argument("trailing");
    return v;
  } catch (const std::exception&) {
    parse_fail(ctx, "expected a number for " + field + ", got '" + value + "'");
  }
}

long long to_ll(const ParseCtx& ctx, const std::string& field, const std::string& value) {
  try {
    std::size_t used = 0;
    long long v = std::stoll(value, &used);
    if (used != value.size()) throw std::invalid_argument("trailing");
    return v;
  } catch (const std::exception&) {
    parse_fail(ctx, "expected an integer for " + field + ", got '" + value + "'");
  }
}

int to_int(const ParseCtx& ctx, const std::string& field, const std::string& value) {
  return static_cast<int>(to_ll(ctx, field, value));
}

std::uint64_t to_u64(const ParseCtx& ctx, const std::string& field, const std::string& value) {
  try {
    std::size_t used = 0;
    std::uint64_t v = std::stoull(value, &used);
    if (used != value.size()) throw std::invalid_argument("trailing");
    return v;
  } catch (const std::exception&) {
    parse_fail(ctx, "expected a nonnegative integer for " + field + ", got '" + value + "'");
  }
}

bool to_bool(const ParseCtx& ctx, const std::string& field, const std::string& value) {
  if (value == "true" || value == "1" || value == "yes") return true;
  if (value == "false" || value == "0" || value == "no") return false;
  parse_fail(ctx, "expected true/false for " + field + ", got '" + value + "'");
}

Vec to_vec(const ParseCtx& ctx, const std::string& field, const std::string& value) {
  Vec out;
  std::istringstream in(value);
  std::string tok;
  while (in >> tok) out.push_back(to_double(ctx, field, tok));
  if (out.empty()) parse_fail(ctx, "expected numbers for " + field);
  return out;
}

std::vector<int> to_ints(const ParseCtx& ctx, const std::string& field, const std::string& value) {
  std::vector<int> out;
  std::istringstream in(value);
  std::string tok;
  while (in >> tok) out.push_back(to_int(ctx, field, tok));
  if (out.empty()) parse_fail(ctx, "expected integers for " + field);
  return out;
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

const char* algorithm_name(AlgorithmKind a) {
  switch (a) {
    case AlgorithmKind::kOda: return "oda";
    case AlgorithmKind::kDda: return "dda";
    case AlgorithmKind::kDdda: return "ddda";
    case AlgorithmKind::kDoda: return "doda";
  }
  return "?";
}

enum class BoundClass { kStream, kNetwork, kOptimistic };

BoundClass bound_class(const std::string& id) {
  if (id.rfind("network_", 0) == 0) return BoundClass::kNetwork;
  if (id.rfind("optimistic_", 0) == 0) return BoundClass::kOptimistic;
  return BoundClass::kStream;
}

}  // namespace

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

// ---- Spec builders ----

Geometry GeometrySpec::build() const {
  if (kind == "free") return Geometry::euclidean_free(dim);
  if (kind == "ball") return Geometry::euclidean_ball(radius, dim);
  if (kind == "simplex") return Geometry::entropic_simplex(dim);
  if (kind == "box") {
    if (lower.empty() || lower.size() != upper.size()) {
      throw ConfigError("box geometry needs matching lower/upper vectors (fields [geometry] lower, upper)");
    }
    return Geometry::euclidean_box(lower, upper);
  }
  throw ConfigError("unknown geometry kind '" + kind + "' (field [geometry] kind)");
}

LossSequence LossSpec::build(const GeometrySpec& geometry, int horizon, SplitMix64& rng) const {
  if (kind == "random_linear") {
    if (horizon < 1) throw ConfigError("random losses need a positive horizon (field [run] horizon)");
    Geometry geo = geometry.build();
    const int d = geo.dim();
    std::vector<Loss> v;
    v.reserve(static_cast<std::size_t>(horizon));
    for (int t = 1; t <= horizon; ++t) {
      Vec dir(static_cast<std::size_t>(d));
      for (double& c : dir) c = 2.0 * rng.next_double() - 1.0;
      double nd = geo.dual_norm(dir);
      if (nd < 1e-12) {
        dir.assign(static_cast<std::size_t>(d), 0.0);
        dir[0] = 1.0;
        nd = geo.dual_norm(dir);
      }
      const double mag = G * (0.25 + 0.75 * rng.next_double());
      for (double& c : dir) c *= mag / nd;
      v.push_back(Loss::linear(std::move(dir)));
    }
    return LossSequence(std::move(v), G);
  }
  if (kind == "drifting_quadratic") {
    if (horizon < 1) throw ConfigError("random losses need a positive horizon (field [run] horizon)");
    const int d = geometry.dim;
    Vec c(static_cast<std::size_t>(d));
    for (double& x : c) x = center_radius * (2.0 * rng.next_double() - 1.0);
    std::vector<Loss> v;
    v.reserve(static_cast<std::size_t>(horizon));
    for (int t = 1; t <= horizon; ++t) {
      v.push_back(Loss::quadratic(c, scale));
      Vec step(static_cast<std::size_t>(d));
      for (double& x : step) x = 2.0 * rng.next_double() - 1.0;
      double n = l2_norm(step);
      if (n < 1e-12) {
        step.assign(static_cast<std::size_t>(d), 0.0);
        step[0] = 1.0;
        n = 1.0;
      }
      axpy(drift / n, step, c);
    }
    return LossSequence(std::move(v), G);
  }
  if (kind == "trace") {
    std::string text = trace_path.empty() ? trace_text : read_text_file(trace_path);
    if (trim(text).empty()) throw ConfigError("trace losses need rows or a path (field [losses] row/path)");
    return LossSequence::from_gradient_rows(text, G);
  }
  if (kind == "periods") return gen_lb_seq_periods(m, len, tau);
  if (kind == "zero_one") {
    const int effective_len = preset_len ? lb_preset_len(m, tau) : len;
    return gen_lb_seq_zero_one(m, effective_len, tau);
  }
  if (kind == "repeat_alternating") {
    if (base_len < 1) throw ConfigError("repeat_alternating needs base_len >= 1 (field [losses] base_len)");
    std::vector<Loss> base;
    base.reserve(static_cast<std::size_t>(base_len));
    for (int t = 1; t <= base_len; ++t) base.push_back(Loss::linear(Vec{t % 2 == 1 ? -1.0 : 1.0}));
    return gen_repeat_seq(LossSequence(std::move(base), 1.0), tau);
  }
  throw ConfigError("unknown loss kind '" + kind + "' (field [losses] kind)");
}

Timeline DelaySpec::build(int horizon, SplitMix64& rng) const {
  if (!activation.empty() && static_cast<int>(activation.size()) != horizon) {
    throw ConfigError("activation must list one agent per round (field [delays] activation)");
  }
  DelayModel model;
  if (kind == "constant") {
    model = DelayModel::constant(tau);
  } else if (kind == "geometric") {
    model = DelayModel::iid_geometric(p, cap);
  } else if (kind == "trace") {
    std::string text = trace_path.empty() ? trace_text : read_text_file(trace_path);
    if (trim(text).empty()) throw ConfigError("trace delays need rows or a path (field [delays] row/path)");
    model = DelayModel::trace(std::move(text));
  } else {
    throw ConfigError("unknown delay kind '" + kind + "' (field [delays] kind)");
  }
  return build_timeline(model, horizon, num_agents, activation, rng.next_u64());
}

NetworkTrace NetworkSpec::build(int horizon, SplitMix64& rng) const {
  if (kind == "uniform") {
    return gen_uniform_latency_network(rng, horizon, num_agents, max_active, latency);
  }
  if (kind == "coordinator") {
    std::vector<int> u = up, d = down;
    if (u.empty()) u.assign(static_cast<std::size_t>(num_agents), 1);
    if (d.empty()) d.assign(static_cast<std::size_t>(num_agents), 1);
    return gen_coordinator_network(rng, horizon, num_agents, max_active, u, d);
  }
  throw ConfigError("unknown network kind '" + kind + "' (field [network] kind)");
}

// ---- Trace generators ----

namespace {

std::vector<std::vector<int>> random_active_rounds(SplitMix64& rng, int horizon, int num_agents,
                                                   int max_active) {
  if (horizon < 1) throw ConfigError("network generation needs a positive horizon");
  if (num_agents < 1 || max_active < 1 || max_active > num_agents) {
    throw ConfigError("network generation needs 1 <= max_active <= agents");
  }
  std::vector<std::vector<int>> active(static_cast<std::size_t>(horizon) + 1);
  std::vector<int> ids(static_cast<std::size_t>(num_agents));
  for (int i = 0; i < num_agents; ++i) ids[static_cast<std::size_t>(i)] = i + 1;
  for (int t = 1; t <= horizon; ++t) {
    const int n = 1 + static_cast<int>(rng.next_below(static_cast<std::uint64_t>(max_active)));
    // Partial Fisher-Yates; the chosen prefix is then sorted for determinism
    // of flattened positions.
    for (int k = 0; k < n; ++k) {
      const int j = k + static_cast<int>(rng.next_below(static_cast<std::uint64_t>(num_agents - k)));
      std::swap(ids[static_cast<std::size_t>(k)], ids[static_cast<std::size_t>(j)]);
    }
    std::vector<int> slot(ids.begin(), ids.begin() + n);
    std::sort(slot.begin(), slot.end());
    active[static_cast<std::size_t>(t)] = std::move(slot);
  }
  return active;
}

}  // namespace

NetworkTrace gen_uniform_latency_network(SplitMix64& rng, int horizon, int num_agents,
                                         int max_active, int latency) {
  if (latency < 0) throw ConfigError("uniform network latency must be nonnegative");
  NetworkTrace trace;
  trace.horizon = horizon;
  trace.num_agents = num_agents;
  trace.active = random_active_rounds(rng, horizon, num_agents, max_active);
  trace.latency.assign(static_cast<std::size_t>(num_agents) + 1,
                       std::vector<int>(static_cast<std::size_t>(num_agents) + 1, latency));
  trace.validate();
  return trace;
}

NetworkTrace gen_coordinator_network(SplitMix64& rng, int horizon, int num_agents,
                                     int max_active, const std::vector<int>& up,
                                     const std::vector<int>& down) {
  if (static_cast<int>(up.size()) != num_agents || static_cast<int>(down.size()) != num_agents) {
    throw ConfigError("coordinator network needs one up and one down latency per agent");
  }
  for (int v : up) {
    if (v < 0) throw ConfigError("coordinator latencies must be nonnegative");
  }
  for (int v : down) {
    if (v < 0) throw ConfigError("coordinator latencies must be nonnegative");
  }
  NetworkTrace trace;
  trace.horizon = horizon;
  trace.num_agents = num_agents;
  trace.active = random_active_rounds(rng, horizon, num_agents, max_active);
  trace.latency.assign(static_cast<std::size_t>(num_agents) + 1,
                       std::vector<int>(static_cast<std::size_t>(num_agents) + 1, 0));
  for (int a = 1; a <= num_agents; ++a) {
    for (int b = 1; b <= num_agents; ++b) {
      trace.latency[static_cast<std::size_t>(a)][static_cast<std::size_t>(b)] =
          up[static_cast<std::size_t>(a - 1)] + down[static_cast<std::size_t>(b - 1)];
    }
  }
  trace.validate();
  return trace;
}

// ---- Scenario parsing ----

Scenario parse_scenario_text(const std::string& text, const std::string& name) {
  Scenario sc;
  sc.name = name;
  ParseCtx ctx{name, 0};
  std::string section;
  bool saw_network = false;
  std::istringstream in(text);
  std::string raw;
  static const std::set<std::string> sections = {"run",     "geometry",   "losses", "delays",
                                                 "network", "rate",       "comparator", "bounds"};
  while (std::getline(in, raw)) {
    ++ctx.line;
    std::string line = raw;
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') parse_fail(ctx, "unterminated section header");
      section = trim(line.substr(1, line.size() - 2));
      if (sections.find(section) == sections.end()) {
        parse_fail(ctx, "unknown section [" + section + "]");
      }
      if (section == "network") saw_network = true;
      continue;
    }
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos) parse_fail(ctx, "expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (section.empty()) parse_fail(ctx, "key '" + key + "' appears before any section");
    if (key.empty()) parse_fail(ctx, "empty key");
    if (value.empty()) parse_fail(ctx, "empty value for '" + key + "'");
    const std::string field = "[" + section + "] " + key;

    if (section == "run") {
      if (key == "horizon") {
        sc.horizon = to_int(ctx, field, value);
      } else if (key == "algorithm") {
        if (value == "oda") sc.algorithm = AlgorithmKind::kOda;
        else if (value == "dda") sc.algorithm = AlgorithmKind::kDda;
        else if (value == "ddda") sc.algorithm = AlgorithmKind::kDdda;
        else if (value == "doda") sc.algorithm = AlgorithmKind::kDoda;
        else parse_fail(ctx, "unknown algorithm '" + value + "' (field " + field + ")");
      } else if (key == "seed") {
        sc.seed = to_u64(ctx, field, value);
      } else if (key == "guess") {
        sc.guess = value;
      } else if (key == "name") {
        sc.name = value;
      } else {
        parse_fail(ctx, "unknown key '" + key + "' in section [run]");
      }
    } else if (section == "geometry") {
      if (key == "kind") sc.geometry.kind = value;
      else if (key == "dim") sc.geometry.dim = to_int(ctx, field, value);
      else if (key == "radius") sc.geometry.radius = to_double(ctx, field, value);
      else if (key == "lower") sc.geometry.lower = to_vec(ctx, field, value);
      else if (key == "upper") sc.geometry.upper = to_vec(ctx, field, value);
      else parse_fail(ctx, "unknown key '" + key + "' in section [geometry]");
    } else if (section == "losses") {
      if (key == "kind") sc.losses.kind = value;
      else if (key == "G") sc.losses.G = to_double(ctx, field, value);
      else if (key == "scale") sc.losses.scale = to_double(ctx, field, value);
      else if (key == "drift") sc.losses.drift = to_double(ctx, field, value);
      else if (key == "center_radius") sc.losses.center_radius = to_double(ctx, field, value);
      else if (key == "path") sc.losses.trace_path = value;
      else if (key == "row") sc.losses.trace_text += value + "\n";
      else if (key == "m") sc.losses.m = to_int(ctx, field, value);
      else if (key == "len") sc.losses.len = to_int(ctx, field, value);
      else if (key == "tau") sc.losses.tau = to_int(ctx, field, value);
      else if (key == "preset") sc.losses.preset_len = to_bool(ctx, field, value);
      else if (key == "base_len") sc.losses.base_len = to_int(ctx, field, value);
      else parse_fail(ctx, "unknown key '" + key + "' in section [losses]");
    } else if (section == "delays") {
      if (key == "kind") sc.delays.kind = value;
      else if (key == "tau") sc.delays.tau = to_int(ctx, field, value);
      else if (key == "p") sc.delays.p = to_double(ctx, field, value);
      else if (key == "cap") sc.delays.cap = to_int(ctx, field, value);
      else if (key == "path") sc.delays.trace_path = value;
      else if (key == "row") sc.delays.trace_text += value + "\n";
      else if (key == "agents") sc.delays.num_agents = to_int(ctx, field, value);
      else if (key == "activation") sc.delays.activation = to_ints(ctx, field, value);
      else parse_fail(ctx, "unknown key '" + key + "' in section [delays]");
    } else if (section == "network") {
      if (key == "kind") sc.network.kind = value;
      else if (key == "agents") sc.network.num_agents = to_int(ctx, field, value);
      else if (key == "max_active") sc.network.max_active = to_int(ctx, field, value);
      else if (key == "latency") sc.network.latency = to_int(ctx, field, value);
      else if (key == "up") {
        const std::vector<int> v = to_ints(ctx, field, value);
        sc.network.up = v;
      } else if (key == "down") {
        const std::vector<int> v = to_ints(ctx, field, value);
        sc.network.down = v;
      } else {
        parse_fail(ctx, "unknown key '" + key + "' in section [network]");
      }
    } else if (section == "rate") {
      if (key == "kind") sc.rate.kind = value;
      else if (key == "eta") sc.rate.eta = to_double(ctx, field, value);
      else if (key == "eta_tilde") sc.rate.eta_tilde = to_double(ctx, field, value);
      else if (key == "R") sc.rate.R = to_double(ctx, field, value);
      else if (key == "G") sc.rate.G = to_double(ctx, field, value);
      else if (key == "L") sc.rate.L = to_double(ctx, field, value);
      else if (key == "tau") sc.rate.tau = to_int(ctx, field, value);
      else if (key == "strict") sc.rate.strict_scale = to_bool(ctx, field, value);
      else if (key == "defer") sc.rate.defer = to_bool(ctx, field, value);
      else parse_fail(ctx, "unknown key '" + key + "' in section [rate]");
    } else if (section == "comparator") {
      if (key == "kind") sc.comparator.kind = value;
      else if (key == "point") sc.comparator.point = to_vec(ctx, field, value);
      else if (key == "radius") sc.comparator.radius = to_double(ctx, field, value);
      else parse_fail(ctx, "unknown key '" + key + "' in section [comparator]");
    } else if (section == "bounds") {
      if (key != "check") parse_fail(ctx, "unknown key '" + key + "' in section [bounds]");
      if (!known_bound_id(value)) {
        parse_fail(ctx, "unknown bound id '" + value + "' (field [bounds] check)");
      }
      sc.bound_checks.push_back(value);
    }
  }

  // Cross-field validation; errors name the offending field.
  static const std::set<std::string> stream_rates = {"constant",        "decreasing",
                                                     "adadelay_o",      "adadelay_o_plus",
                                                     "card_decreasing", "adadelay_dist"};
  static const std::set<std::string> network_rates = {"fixed", "global_card", "dist"};
  static const std::set<std::string> optimistic_rates = {"pair", "relaxed", "adaptive"};
  const bool stream = sc.algorithm == AlgorithmKind::kOda || sc.algorithm == AlgorithmKind::kDda;
  if (stream && stream_rates.find(sc.rate.kind) == stream_rates.end()) {
    throw ConfigError(sc.name + ": rate policy '" + sc.rate.kind +
                      "' does not apply to single-stream runs (field [rate] kind)");
  }
  if (sc.algorithm == AlgorithmKind::kDdda &&
      network_rates.find(sc.rate.kind) == network_rates.end()) {
    throw ConfigError(sc.name + ": rate policy '" + sc.rate.kind +
                      "' does not apply to network runs (field [rate] kind)");
  }
  if (sc.algorithm == AlgorithmKind::kDoda &&
      optimistic_rates.find(sc.rate.kind) == optimistic_rates.end()) {
    throw ConfigError(sc.name + ": rate policy '" + sc.rate.kind +
                      "' does not apply to optimistic runs (field [rate] kind)");
  }
  if (sc.algorithm == AlgorithmKind::kOda &&
      (sc.delays.kind != "constant" || sc.delays.tau != 0)) {
    throw ConfigError(sc.name + ": undelayed runs take constant delay 0 (field [delays])");
  }
  if (sc.algorithm == AlgorithmKind::kDoda && sc.geometry.kind != "free") {
    throw ConfigError(sc.name +
                      ": optimistic runs need the unconstrained geometry (field [geometry] kind)");
  }
  if (sc.algorithm != AlgorithmKind::kDdda && saw_network) {
    throw ConfigError(sc.name + ": section [network] applies only to ddda runs");
  }
  if (sc.algorithm == AlgorithmKind::kDoda) {
    static const std::set<std::string> guesses = {"zero", "last", "field_global", "field_local"};
    if (guesses.find(sc.guess) == guesses.end()) {
      throw ConfigError(sc.name + ": unknown guess policy '" + sc.guess + "' (field [run] guess)");
    }
  }
  if (stream && sc.rate.kind == "constant" && !(sc.rate.eta > 0.0)) {
    throw ConfigError(sc.name + ": a constant rate needs eta > 0 (field [rate] eta)");
  }
  if (sc.comparator.kind != "hindsight" && sc.comparator.kind != "point") {
    throw ConfigError(sc.name + ": unknown comparator kind '" + sc.comparator.kind +
                      "' (field [comparator] kind)");
  }
  if (sc.comparator.kind == "point" && sc.comparator.point.empty()) {
    throw ConfigError(sc.name + ": a point comparator needs coordinates (field [comparator] point)");
  }
  for (const std::string& id : sc.bound_checks) {
    const BoundClass cls = bound_class(id);
    const bool ok = (cls == BoundClass::kStream && stream) ||
                    (cls == BoundClass::kNetwork && sc.algorithm == AlgorithmKind::kDdda) ||
                    (cls == BoundClass::kOptimistic && sc.algorithm == AlgorithmKind::kDoda);
    if (!ok) {
      throw ConfigError(sc.name + ": bound '" + id + "' does not apply to algorithm '" +
                        algorithm_name(sc.algorithm) + "' (field [bounds] check)");
    }
  }
  return sc;
}

Scenario parse_scenario_file(const std::string& path) {
  std::string stem = path;
  const std::size_t slash = stem.find_last_of('/');
  if (slash != std::string::npos) stem = stem.substr(slash + 1);
  return parse_scenario_text(read_text_file(path), stem);
}

// ---- Comparator ----

Vec project_simplex(const Vec& y) {
  const std::size_t d = y.size();
  Vec u = y;
  std::sort(u.begin(), u.end(), std::greater<double>());
  double prefix = 0.0, theta = 0.0;
  int rho = 0;
  double css = 0.0;
  for (std::size_t j = 0; j < d; ++j) {
    css += u[j];
    const double cand = (css - 1.0) / static_cast<double>(j + 1);
    if (u[j] - cand > 0.0) {
      rho = static_cast<int>(j + 1);
      theta = cand;
      prefix = css;
    }
  }
  (void)prefix;
  (void)rho;
  Vec x(d);
  for (std::size_t k = 0; k < d; ++k) x[k] = std::max(y[k] - theta, 0.0);
  return x;
}

namespace {

// Projection onto the feasible set in the Euclidean metric; the free
// geometry projects onto the comparator search ball around x_start.
Vec euclidean_project(const Geometry& geometry, const Vec& y, double free_radius,
                      const Vec& x_start) {
  switch (geometry.kind()) {
    case GeometryKind::kEuclideanFree: {
      Vec diff = sub(y, x_start);
      const double n = l2_norm(diff);
      if (n <= free_radius) return y;
      Vec out = x_start;
      axpy(free_radius / n, diff, out);
      return out;
    }
    case GeometryKind::kEuclideanBall: {
      const double n = l2_norm(y);
      if (n <= geometry.radius()) return y;
      return scaled(y, geometry.radius() / n);
    }
    case GeometryKind::kEuclideanBox: {
      Vec out = y;
      for (std::size_t k = 0; k < out.size(); ++k) {
        out[k] = std::min(std::max(out[k], geometry.lower()[k]), geometry.upper()[k]);
      }
      return out;
    }
    case GeometryKind::kEntropicSimplex:
      return project_simplex(y);
  }
  throw std::logic_error("unreachable geometry kind");
}

}  // namespace

ComparatorResult hindsight_comparator(const LossSequence& losses, const Geometry& geometry,
                                      double free_radius, const Vec& x_start) {
  const int T = losses.horizon();
  const int d = losses.dim();
  if (T < 1) throw ConfigError("hindsight comparator needs at least one loss");
  if (geometry.kind() == GeometryKind::kEuclideanFree && !(free_radius > 0.0)) {
    throw ConfigError("the unconstrained geometry needs a comparator radius (field [comparator] radius)");
  }
  bool all_linear = true;
  for (int t = 1; t <= T; ++t) {
    if (losses.at(t).kind() != LossKind::kLinear) all_linear = false;
  }
  ComparatorResult out;
  const double tie_tol = 1e-12;
  if (all_linear) {
    Vec gsum = zeros(static_cast<std::size_t>(d));
    for (int t = 1; t <= T; ++t) axpy(1.0, losses.at(t).linear_gradient(), gsum);
    switch (geometry.kind()) {
      case GeometryKind::kEuclideanFree: {
        const double n = l2_norm(gsum);
        out.point = x_start;
        if (n < tie_tol) {
          out.note = "all comparators tie on linearized regret";
        } else {
          axpy(-free_radius / n, gsum, out.point);
        }
        return out;
      }
      case GeometryKind::kEuclideanBall: {
        const double n = l2_norm(gsum);
        if (n < tie_tol) {
          out.point = geometry.prior_point();
          out.note = "all comparators tie on linearized regret";
        } else {
          out.point = scaled(gsum, -geometry.radius() / n);
        }
        return out;
      }
      case GeometryKind::kEuclideanBox: {
        out.point.resize(static_cast<std::size_t>(d));
        bool tie = true;
        for (std::size_t k = 0; k < out.point.size(); ++k) {
          if (gsum[k] > tie_tol) {
            out.point[k] = geometry.lower()[k];
            tie = false;
          } else if (gsum[k] < -tie_tol) {
            out.point[k] = geometry.upper()[k];
            tie = false;
          } else {
            out.point[k] = geometry.prior_point()[k];
          }
        }
        if (tie) out.note = "all comparators tie on linearized regret";
        return out;
      }
      case GeometryKind::kEntropicSimplex: {
        std::size_t best = 0;
        bool tie = true;
        for (std::size_t k = 1; k < gsum.size(); ++k) {
          if (gsum[k] < gsum[best] - tie_tol) best = k;
        }
        for (std::size_t k = 0; k < gsum.size(); ++k) {
          if (std::abs(gsum[k] - gsum[best]) > tie_tol) tie = false;
        }
        out.point = zeros(static_cast<std::size_t>(d));
        out.point[best] = 1.0;
        if (tie) {
          out.point = geometry.prior_point();
          out.note = "all comparators tie on linearized regret";
        }
        return out;
      }
    }
  }

  // Quadratic pieces make the total a spherical quadratic: its constrained
  // minimizer is the Euclidean projection of the unconstrained one.
  double curvature = 0.0;
  Vec shift = zeros(static_cast<std::size_t>(d));
  bool reducible = true;
  for (int t = 1; t <= T; ++t) {
    const Loss& loss = losses.at(t);
    if (loss.kind() == LossKind::kQuadratic) {
      curvature += loss.scale();
      axpy(loss.scale(), loss.center(), shift);
    } else if (loss.kind() == LossKind::kLinear) {
      axpy(-1.0, loss.linear_gradient(), shift);
    } else {
      reducible = false;
    }
  }
  if (reducible && curvature > 0.0) {
    Vec unconstrained = scaled(shift, 1.0 / curvature);
    out.point = euclidean_project(geometry, unconstrained, free_radius, x_start);
    return out;
  }

  // Projected subgradient fallback with a certified optimality gap.
  const int iterations = 10000;
  double diameter = 0.0;
  switch (geometry.kind()) {
    case GeometryKind::kEuclideanFree: diameter = 2.0 * free_radius; break;
    case GeometryKind::kEuclideanBall: diameter = 2.0 * geometry.radius(); break;
    case GeometryKind::kEuclideanBox: diameter = l2_norm(sub(geometry.upper(), geometry.lower())); break;
    case GeometryKind::kEntropicSimplex: diameter = 2.0; break;
  }
  auto total_value = [&](const Vec& x) {
    double v = 0.0;
    for (int t = 1; t <= T; ++t) v += losses.at(t).value(x);
    return v;
  };
  auto total_gradient = [&](const Vec& x) {
    Vec g = zeros(static_cast<std::size_t>(d));
    for (int t = 1; t <= T; ++t) axpy(1.0, losses.at(t).gradient(x), g);
    return g;
  };
  Vec x = geometry.kind() == GeometryKind::kEuclideanFree ? x_start : geometry.prior_point();
  double grad_cap = std::max(l2_norm(total_gradient(x)), 1e-12);
  const double step = diameter / (grad_cap * std::sqrt(static_cast<double>(iterations)));
  Vec best = x;
  double best_value = total_value(x);
  for (int k = 0; k < iterations; ++k) {
    Vec g = total_gradient(x);
    grad_cap = std::max(grad_cap, l2_norm(g));
    axpy(-step, g, x);
    x = euclidean_project(geometry, x, free_radius, x_start);
    const double v = total_value(x);
    if (v < best_value) {
      best_value = v;
      best = x;
    }
  }
  out.point = best;
  out.exact = false;
  out.gap = diameter * grad_cap / std::sqrt(static_cast<double>(iterations));
  out.note = "projected subgradient, certified gap " + format_double(out.gap);
  return out;
}

// ---- Bound registry ----

const std::vector<std::string>& all_bound_ids() {
  static const std::vector<std::string> ids = {
      "time_ordered",     "reordered",          "regime_unavail",
      "regime_total_delay", "regime_lag",       "decreasing",
      "adadelay_o",       "adadelay_o_plus",    "adadelay_o_plus_oracle",
      "card_decreasing",  "adadelay_dist",      "network_fixed",
      "network_card",     "network_discrepancy", "optimistic_gap",
      "optimistic_variation", "optimistic_field", "optimistic_adaptive"};
  return ids;
}

bool known_bound_id(const std::string& id) {
  const auto& ids = all_bound_ids();
  return std::find(ids.begin(), ids.end(), id) != ids.end();
}

BoundCheck make_bound_check(const std::string& id, double measured, double rhs) {
  BoundCheck bc;
  bc.id = id;
  bc.measured = measured;
  bc.rhs = rhs;
  bc.slack = rhs - measured;
  bc.satisfied = measured <= rhs + std::max(1e-9 * std::abs(rhs), 1e-9);
  return bc;
}

namespace {

void require_rate(const std::string& id, const std::string& have, const std::string& want) {
  if (have != want) {
    throw ConfigError("bound '" + id + "' needs the '" + want + "' rate policy (configured: '" +
                      have + "')");
  }
}

double min_eta(const StreamRunResult& res) {
  double m = res.rows.front().eta;
  for (const StepRow& row : res.rows) m = std::min(m, row.eta);
  return m;
}

double stream_bound_rhs(const std::string& id, const Scenario& sc, const StreamRunResult& res,
                        const Timeline& timeline) {
  const int T = static_cast<int>(res.rows.size());
  const double R = sc.rate.R;
  const double G = sc.rate.G;
  const double tau = static_cast<double>(sc.rate.tau);

  if (id == "time_ordered") {
    for (std::size_t k = 1; k < res.rows.size(); ++k) {
      if (res.rows[k].eta > res.rows[k - 1].eta * (1.0 + 1e-12)) {
        throw ConfigError("bound 'time_ordered' needs non-increasing rates");
      }
    }
    return rhs_time_ordered(res);
  }
  if (id == "reordered") {
    const std::vector<Time> order = rate_key_order(res);
    if (!is_faithful(order, timeline)) {
      throw ConfigError("bound 'reordered' needs a faithful rate-key ordering");
    }
    return rhs_along_order(res, order);
  }
  if (id == "regime_unavail") {
    require_rate(id, sc.rate.kind, "constant");
    const double O = static_cast<double>(res.stats.max_unavailability);
    return 2.0 * R * G * std::sqrt((1.0 + 2.0 * O) * T);
  }
  if (id == "regime_total_delay") {
    require_rate(id, sc.rate.kind, "constant");
    const double D = static_cast<double>(res.stats.cumulative_unavailability.back());
    return 2.0 * std::sqrt(2.0) * R * G * std::sqrt(static_cast<double>(T) + 2.0 * D);
  }
  if (id == "regime_lag") {
    require_rate(id, sc.rate.kind, "constant");
    return 2.0 * R * std::sqrt(res.stats.lag.back());
  }
  if (id == "decreasing") {
    require_rate(id, sc.rate.kind, "decreasing");
    return 2.0 * R * G * std::sqrt(static_cast<double>(T) * (1.0 + 2.0 * tau));
  }
  if (id == "adadelay_o") {
    require_rate(id, sc.rate.kind, "adadelay_o");
    return 2.0 * R * R / res.rows.back().eta;
  }
  if (id == "adadelay_o_plus") {
    require_rate(id, sc.rate.kind, "adadelay_o_plus");
    return 2.0 * R * R / min_eta(res);
  }
  if (id == "adadelay_o_plus_oracle") {
    require_rate(id, sc.rate.kind, "adadelay_o_plus");
    // True-lag variant: availability lag plus the maintained residual count,
    // against the total-delay alternative.
    std::vector<double> norms(static_cast<std::size_t>(T) + 1, 0.0);
    for (int t = 1; t <= T; ++t) norms[static_cast<std::size_t>(t)] = res.produced[static_cast<std::size_t>(t)].dual_norm;
    const DelayStats avail = delay_stats(timeline, norms);
    double worst = 0.0;
    for (int t = 1; t <= T; ++t) {
      const double lag = avail.lag[static_cast<std::size_t>(t)];
      const double rho_t = static_cast<double>(res.rows[static_cast<std::size_t>(t - 1)].residual);
      worst = std::max(worst, std::sqrt(lag + G * G * rho_t));
    }
    const double D = static_cast<double>(avail.cumulative_unavailability.back());
    const double alt = G * std::sqrt(static_cast<double>(T) + 2.0 * D);
    return 2.0 * R * std::min(worst, alt);
  }
  if (id == "card_decreasing") {
    require_rate(id, sc.rate.kind, "card_decreasing");
    return 2.0 * R * G * std::sqrt((static_cast<double>(T) + tau) * (1.0 + 2.0 * tau));
  }
  if (id == "adadelay_dist") {
    require_rate(id, sc.rate.kind, "adadelay_dist");
    return 2.0 * R * R / min_eta(res);
  }
  throw ConfigError("bound '" + id + "' does not apply to single-stream runs");
}

}  // namespace

// ---- Scenario execution ----

namespace {

RateConfig stream_rate_config(const RateSpec& rs) {
  if (rs.kind == "constant") return RateConfig::constant(rs.eta);
  if (rs.kind == "decreasing") return RateConfig::decreasing(rs.R, rs.G, rs.tau);
  if (rs.kind == "adadelay_o") return RateConfig::adadelay_o(rs.R, rs.G, rs.tau);
  if (rs.kind == "adadelay_o_plus") return RateConfig::adadelay_o_plus(rs.R, rs.G);
  if (rs.kind == "card_decreasing") return RateConfig::card_decreasing(rs.R, rs.G, rs.tau);
  if (rs.kind == "adadelay_dist") return RateConfig::adadelay_dist(rs.R, rs.G, rs.tau);
  throw ConfigError("unknown rate policy '" + rs.kind + "' (field [rate] kind)");
}

ComparatorResult resolve_comparator(const Scenario& sc, const LossSequence& losses,
                                    const Geometry& geometry, const Vec& x_start) {
  if (sc.comparator.kind == "point") {
    ComparatorResult r;
    r.point = sc.comparator.point;
    geometry.require_feasible(r.point, "comparator");
    r.note = "fixed comparator";
    return r;
  }
  return hindsight_comparator(losses, geometry, sc.comparator.radius, x_start);
}

void finish_report(RunReport& rep) {
  rep.all_bounds_hold = true;
  for (const BoundCheck& bc : rep.bounds) {
    if (!bc.satisfied) rep.all_bounds_hold = false;
  }
}

RunReport run_stream_scenario(const Scenario& sc, const Geometry& geometry,
                              const LossSequence& losses, SplitMix64& delay_rng) {
  const int T = losses.horizon();
  Timeline timeline = sc.delays.build(T, delay_rng);
  ComparatorResult comparator = resolve_comparator(sc, losses, geometry, geometry.prior_point());

  StreamRunConfig cfg;
  cfg.rate = stream_rate_config(sc.rate);
  cfg.defer_usage = sc.rate.defer;
  StreamRunResult res = run_single_agent(timeline, geometry, losses, comparator.point, cfg);

  RunReport rep;
  rep.scenario_name = sc.name;
  rep.algorithm = sc.algorithm;
  rep.comparator = comparator;
  rep.regret = res.ledger.actual;
  rep.linearized_regret = res.ledger.linearized;
  rep.stats = res.stats;
  const bool has_lambda = cfg.rate.kind == RateKind::kAdaDelayO ||
                          cfg.rate.kind == RateKind::kAdaDelayOPlus ||
                          cfg.rate.kind == RateKind::kAdaDelayDist;
  const bool has_rho = cfg.rate.kind == RateKind::kAdaDelayOPlus;
  rep.rows.reserve(static_cast<std::size_t>(T));
  for (int t = 1; t <= T; ++t) {
    const StepRow& row = res.rows[static_cast<std::size_t>(t - 1)];
    ReportRow r;
    r.t = t;
    r.agent = row.agent;
    r.loss = row.loss_value;
    r.inst_regret = res.ledger.inst_actual[static_cast<std::size_t>(t)];
    r.cum_regret = res.ledger.cum_actual[static_cast<std::size_t>(t)];
    r.eta = row.eta;
    r.has_lambda_hat = has_lambda;
    r.lambda_hat = row.lag_estimate;
    r.has_rho = has_rho;
    r.rho = row.residual;
    rep.rows.push_back(r);
  }
  for (const std::string& id : sc.bound_checks) {
    rep.bounds.push_back(make_bound_check(id, rep.regret, stream_bound_rhs(id, sc, res, timeline)));
  }
  finish_report(rep);
  return rep;
}

RunReport run_network_scenario(const Scenario& sc, const Geometry& geometry,
                               const NetworkTrace& trace, const LossSequence& losses) {
  ComparatorResult comparator = resolve_comparator(sc, losses, geometry, geometry.prior_point());

  NetworkRunConfig cfg;
  cfg.defer_usage = sc.rate.defer;
  double fixed_eta = sc.rate.eta;
  if (sc.rate.kind == "fixed") {
    if (!(fixed_eta > 0.0)) {
      fixed_eta = lr_global_fixed(sc.rate.R, sc.rate.G, trace.rms_active(), sc.rate.tau,
                                  trace.horizon);
    }
    cfg.rate = NetworkRateConfig::fixed(fixed_eta);
  } else if (sc.rate.kind == "global_card") {
    cfg.rate = NetworkRateConfig::global_card(sc.rate.R, sc.rate.G, sc.rate.tau);
  } else if (sc.rate.kind == "dist") {
    cfg.rate = NetworkRateConfig::dist(sc.rate.R, sc.rate.G, sc.rate.tau);
  } else {
    throw ConfigError("unknown rate policy '" + sc.rate.kind + "' (field [rate] kind)");
  }
  NetworkRunResult res = run_network(trace, geometry, losses, comparator.point, cfg);

  RunReport rep;
  rep.scenario_name = sc.name;
  rep.algorithm = sc.algorithm;
  rep.comparator = comparator;
  rep.regret = res.regret.effective;
  rep.collective_regret = res.regret.collective;
  rep.discrepancy = res.regret.discrepancy;
  rep.stats.max_delay = res.stats.max_delay;
  rep.stats.lost_feedback = res.stats.lost_feedback;
  const bool has_lambda = cfg.rate.kind == NetworkRateKind::kDist;
  double cum = 0.0;
  rep.rows.reserve(res.rows.size());
  for (const NetworkStepRow& row : res.rows) {
    ReportRow r;
    r.t = row.flat;
    r.agent = row.agent;
    r.loss = row.loss_value;
    const Vec& play = res.plays[static_cast<std::size_t>(row.round)][static_cast<std::size_t>(row.position - 1)];
    const Loss& loss = losses.at(row.flat);
    r.inst_regret = loss.value(play) - loss.value(comparator.point);
    cum += r.inst_regret;
    r.cum_regret = cum;
    r.eta = row.eta;
    r.has_lambda_hat = has_lambda;
    r.lambda_hat = row.lag_estimate;
    rep.rows.push_back(r);
  }

  const double R = sc.rate.R;
  const double G = sc.rate.G;
  const double tau = static_cast<double>(sc.rate.tau);
  for (const std::string& id : sc.bound_checks) {
    double rhs = 0.0;
    if (id == "network_fixed") {
      require_rate(id, sc.rate.kind, "fixed");
      rhs = 2.0 * R * G * res.rms_active *
            std::sqrt((2.0 * tau + 1.0) * static_cast<double>(trace.horizon));
    } else if (id == "network_card") {
      require_rate(id, sc.rate.kind, "global_card");
      const double M = static_cast<double>(res.total_plays);
      const double N = static_cast<double>(res.max_active);
      const double lead = 5.0 * tau + 3.0;
      rhs = R * G * std::sqrt(lead * (M * N + (tau + 1.0) * N * N)) +
            R * G * std::sqrt(lead * M * N);
    } else if (id == "network_discrepancy") {
      rhs = res.regret.effective + res.regret.discrepancy;
    } else {
      throw ConfigError("bound '" + id + "' does not apply to network runs");
    }
    rep.bounds.push_back(make_bound_check(id, res.regret.collective, rhs));
  }
  finish_report(rep);
  return rep;
}

RunReport run_optimistic_scenario(const Scenario& sc, const Geometry& geometry,
                                  const LossSequence& losses, SplitMix64& delay_rng) {
  const int T = losses.horizon();
  Timeline timeline = sc.delays.build(T, delay_rng);

  OptimisticRunConfig cfg;
  cfg.tau = sc.rate.tau;
  cfg.strict_scale = sc.rate.strict_scale;
  if (sc.guess == "zero") cfg.guess = GuessKind::kZero;
  else if (sc.guess == "last") cfg.guess = GuessKind::kLastUniform;
  else if (sc.guess == "field_global") cfg.guess = GuessKind::kFieldGlobal;
  else if (sc.guess == "field_local") cfg.guess = GuessKind::kFieldLocal;
  else throw ConfigError("unknown guess policy '" + sc.guess + "' (field [run] guess)");

  if (sc.rate.kind == "pair") {
    double eta = sc.rate.eta;
    double eta_tilde = sc.rate.eta_tilde;
    if (!(eta > 0.0)) {
      const double v_bar = variation(losses, sc.rate.tau + 1);
      const auto pair = lr_pair_constant(sc.rate.R, sc.rate.tau, v_bar);
      eta = pair.first;
      eta_tilde = pair.second;
    } else if (!(eta_tilde > 0.0)) {
      eta_tilde = (2.0 * sc.rate.tau + 1.0) * eta;
    }
    cfg.rate = OptimisticRateConfig::pair(eta, eta_tilde);
  } else if (sc.rate.kind == "relaxed") {
    if (!(sc.rate.eta > 0.0)) {
      throw ConfigError("the relaxed rate needs eta > 0 (field [rate] eta)");
    }
    cfg.rate = OptimisticRateConfig::relaxed(sc.rate.eta);
  } else if (sc.rate.kind == "adaptive") {
    cfg.rate = OptimisticRateConfig::adaptive(sc.rate.R, sc.rate.G, sc.rate.L, sc.rate.tau);
  } else {
    throw ConfigError("unknown rate policy '" + sc.rate.kind + "' (field [rate] kind)");
  }

  ComparatorResult comparator =
      resolve_comparator(sc, losses, geometry, zeros(static_cast<std::size_t>(geometry.dim())));
  OptimisticRunResult res = run_optimistic(timeline, geometry, losses, comparator.point, cfg);

  RunReport rep;
  rep.scenario_name = sc.name;
  rep.algorithm = sc.algorithm;
  rep.comparator = comparator;
  rep.regret = res.ledger.actual;
  rep.linearized_regret = res.ledger.linearized;
  rep.stats = res.stats;
  rep.rows.reserve(static_cast<std::size_t>(T));
  for (int t = 1; t <= T; ++t) {
    const OptimisticStepRow& row = res.rows[static_cast<std::size_t>(t - 1)];
    ReportRow r;
    r.t = t;
    r.agent = row.agent;
    r.loss = row.loss_value;
    r.inst_regret = res.ledger.inst_actual[static_cast<std::size_t>(t)];
    r.cum_regret = res.ledger.cum_actual[static_cast<std::size_t>(t)];
    r.eta = row.eta;
    r.has_eta_tilde = true;
    r.eta_tilde = row.eta_tilde;
    rep.rows.push_back(r);
  }

  const double R = sc.rate.R;
  const double G = sc.rate.G;
  const double L = sc.rate.L;
  const double tau = static_cast<double>(sc.rate.tau);
  for (const std::string& id : sc.bound_checks) {
    double rhs = 0.0;
    if (id == "optimistic_gap") {
      if (sc.rate.kind != "pair" && sc.rate.kind != "relaxed") {
        throw ConfigError("bound 'optimistic_gap' needs the 'pair' or 'relaxed' rate policy");
      }
      rhs = res.rhs_gap;
    } else if (id == "optimistic_variation") {
      if (cfg.guess != GuessKind::kLastUniform) {
        throw ConfigError("bound 'optimistic_variation' needs the 'last' guess policy");
      }
      require_rate(id, sc.rate.kind, "pair");
      rhs = R * std::sqrt((2.0 * tau + 1.0) * variation(losses, sc.rate.tau + 1));
    } else if (id == "optimistic_field") {
      if (cfg.guess != GuessKind::kFieldGlobal && cfg.guess != GuessKind::kFieldLocal) {
        throw ConfigError("bound 'optimistic_field' needs a field guess policy");
      }
      if (!res.smooth_condition_all) {
        throw ConfigError("bound 'optimistic_field' needs 2 eta_tilde^2 L^2 <= 1 throughout");
      }
      rhs = res.rhs_deviation;
    } else if (id == "optimistic_adaptive") {
      require_rate(id, sc.rate.kind, "adaptive");
      const double lead = 4.0 * tau + 1.0;
      rhs = std::max(std::sqrt(2.0) * R * R * L * lead,
                     2.0 * R * std::sqrt(lead * (res.deviation_total +
                                                 4.0 * G * G * (3.0 * tau + 1.0))));
    } else {
      throw ConfigError("bound '" + id + "' does not apply to optimistic runs");
    }
    rep.bounds.push_back(make_bound_check(id, rep.regret, rhs));
  }
  finish_report(rep);
  return rep;
}

}  // namespace

RunReport run_scenario(const Scenario& sc) {
  Geometry geometry = sc.geometry.build();
  SplitMix64 root(sc.seed);
  SplitMix64 loss_rng = root.split();
  SplitMix64 delay_rng = root.split();
  SplitMix64 net_rng = root.split();

  if (sc.algorithm == AlgorithmKind::kDdda) {
    if (sc.horizon < 1) throw ConfigError(sc.name + ": network runs need a positive horizon (field [run] horizon)");
    NetworkTrace trace = sc.network.build(sc.horizon, net_rng);
    LossSequence losses = sc.losses.build(sc.geometry, trace.total_plays(), loss_rng);
    if (losses.horizon() != trace.total_plays()) {
      throw ConfigError(sc.name + ": the loss count must equal the network's total plays (" +
                        std::to_string(trace.total_plays()) + " needed, " +
                        std::to_string(losses.horizon()) + " given)");
    }
    return run_network_scenario(sc, geometry, trace, losses);
  }

  LossSequence losses = sc.losses.build(sc.geometry, sc.horizon, loss_rng);
  if (sc.horizon > 0 && sc.horizon != losses.horizon()) {
    throw ConfigError(sc.name + ": horizon " + std::to_string(sc.horizon) +
                      " does not match the loss sequence length " +
                      std::to_string(losses.horizon()) + " (field [run] horizon)");
  }
  if (losses.dim() != geometry.dim()) {
    throw ConfigError(sc.name + ": loss dimension " + std::to_string(losses.dim()) +
                      " does not match geometry dimension " + std::to_string(geometry.dim()));
  }
  if (sc.algorithm == AlgorithmKind::kDoda) {
    return run_optimistic_scenario(sc, geometry, losses, delay_rng);
  }
  return run_stream_scenario(sc, geometry, losses, delay_rng);
}

std::string scenario_to_text(const Scenario& sc) {
  std::ostringstream out;
  out << "[run]\n";
  out << "horizon = " << sc.horizon << "\n";
  out << "algorithm = " << algorithm_name(sc.algorithm) << "\n";
  out << "seed = " << sc.seed << "\n";
  if (sc.algorithm == AlgorithmKind::kDoda) out << "guess = " << sc.guess << "\n";

  out << "\n[geometry]\n";
  out << "kind = " << sc.geometry.kind << "\n";
  if (sc.geometry.kind == "box") {
    out << "lower =";
    for (double v : sc.geometry.lower) out << ' ' << format_double(v);
    out << "\nupper =";
    for (double v : sc.geometry.upper) out << ' ' << format_double(v);
    out << "\n";
  } else {
    out << "dim = " << sc.geometry.dim << "\n";
    if (sc.geometry.kind == "ball") out << "radius = " << format_double(sc.geometry.radius) << "\n";
  }

  out << "\n[losses]\n";
  out << "kind = " << sc.losses.kind << "\n";
  if (sc.losses.kind == "random_linear") {
    out << "G = " << format_double(sc.losses.G) << "\n";
  } else if (sc.losses.kind == "drifting_quadratic") {
    out << "G = " << format_double(sc.losses.G) << "\n";
    out << "scale = " << format_double(sc.losses.scale) << "\n";
    out << "drift = " << format_double(sc.losses.drift) << "\n";
    out << "center_radius = " << format_double(sc.losses.center_radius) << "\n";
  } else if (sc.losses.kind == "trace") {
    out << "G = " << format_double(sc.losses.G) << "\n";
    if (!sc.losses.trace_path.empty()) {
      out << "path = " << sc.losses.trace_path << "\n";
    } else {
      std::istringstream rows(sc.losses.trace_text);
      std::string row;
      while (std::getline(rows, row)) {
        if (!trim(row).empty()) out << "row = " << row << "\n";
      }
    }
  } else if (sc.losses.kind == "periods" || sc.losses.kind == "zero_one") {
    out << "m = " << sc.losses.m << "\n";
    if (sc.losses.kind == "zero_one" && sc.losses.preset_len) out << "preset = true\n";
    else out << "len = " << sc.losses.len << "\n";
    out << "tau = " << sc.losses.tau << "\n";
  } else if (sc.losses.kind == "repeat_alternating") {
    out << "base_len = " << sc.losses.base_len << "\n";
    out << "tau = " << sc.losses.tau << "\n";
  }

  if (sc.algorithm == AlgorithmKind::kDdda) {
    out << "\n[network]\n";
    out << "kind = " << sc.network.kind << "\n";
    out << "agents = " << sc.network.num_agents << "\n";
    out << "max_active = " << sc.network.max_active << "\n";
    if (sc.network.kind == "uniform") {
      out << "latency = " << sc.network.latency << "\n";
    } else {
      out << "up =";
      for (int v : sc.network.up) out << ' ' << v;
      out << "\ndown =";
      for (int v : sc.network.down) out << ' ' << v;
      out << "\n";
    }
  } else {
    out << "\n[delays]\n";
    out << "kind = " << sc.delays.kind << "\n";
    if (sc.delays.kind == "constant") {
      out << "tau = " << sc.delays.tau << "\n";
    } else if (sc.delays.kind == "geometric") {
      out << "p = " << format_double(sc.delays.p) << "\n";
      out << "cap = " << sc.delays.cap << "\n";
    } else if (sc.delays.kind == "trace") {
      if (!sc.delays.trace_path.empty()) {
        out << "path = " << sc.delays.trace_path << "\n";
      } else {
        std::istringstream rows(sc.delays.trace_text);
        std::string row;
        while (std::getline(rows, row)) {
          if (!trim(row).empty()) out << "row = " << row << "\n";
        }
      }
    }
    if (sc.delays.num_agents != 1) out << "agents = " << sc.delays.num_agents << "\n";
    if (!sc.delays.activation.empty()) {
      out << "activation =";
      for (int a : sc.delays.activation) out << ' ' << a;
      out << "\n";
    }
  }

  out << "\n[rate]\n";
  out << "kind = " << sc.rate.kind << "\n";
  if (sc.rate.eta > 0.0) out << "eta = " << format_double(sc.rate.eta) << "\n";
  if (sc.rate.eta_tilde > 0.0) out << "eta_tilde = " << format_double(sc.rate.eta_tilde) << "\n";
  out << "R = " << format_double(sc.rate.R) << "\n";
  out << "G = " << format_double(sc.rate.G) << "\n";
  if (sc.rate.kind == "adaptive") out << "L = " << format_double(sc.rate.L) << "\n";
  out << "tau = " << sc.rate.tau << "\n";
  if (!sc.rate.strict_scale) out << "strict = false\n";
  if (sc.rate.defer) out << "defer = true\n";

  out << "\n[comparator]\n";
  out << "kind = " << sc.comparator.kind << "\n";
  if (sc.comparator.kind == "point") {
    out << "point =";
    for (double v : sc.comparator.point) out << ' ' << format_double(v);
    out << "\n";
  } else {
    out << "radius = " << format_double(sc.comparator.radius) << "\n";
  }

  if (!sc.bound_checks.empty()) {
    out << "\n[bounds]\n";
    for (const std::string& id : sc.bound_checks) out << "check = " << id << "\n";
  }
  return out.str();
}

void validate_scenario(const Scenario& sc) {
  Geometry geometry = sc.geometry.build();
  SplitMix64 root(sc.seed);
  SplitMix64 loss_rng = root.split();
  SplitMix64 delay_rng = root.split();
  SplitMix64 net_rng = root.split();
  if (sc.algorithm == AlgorithmKind::kDdda) {
    if (sc.horizon < 1) {
      throw ConfigError(sc.name + ": network runs need a positive horizon (field [run] horizon)");
    }
    NetworkTrace trace = sc.network.build(sc.horizon, net_rng);
    LossSequence losses = sc.losses.build(sc.geometry, trace.total_plays(), loss_rng);
    if (losses.horizon() != trace.total_plays()) {
      throw ConfigError(sc.name + ": the loss count must equal the network's total plays (" +
                        std::to_string(trace.total_plays()) + " needed, " +
                        std::to_string(losses.horizon()) + " given)");
    }
    resolve_comparator(sc, losses, geometry, geometry.prior_point());
    return;
  }
  LossSequence losses = sc.losses.build(sc.geometry, sc.horizon, loss_rng);
  if (sc.horizon > 0 && sc.horizon != losses.horizon()) {
    throw ConfigError(sc.name + ": horizon " + std::to_string(sc.horizon) +
                      " does not match the loss sequence length " +
                      std::to_string(losses.horizon()) + " (field [run] horizon)");
  }
  if (losses.dim() != geometry.dim()) {
    throw ConfigError(sc.name + ": loss dimension " + std::to_string(losses.dim()) +
                      " does not match geometry dimension " + std::to_string(geometry.dim()));
  }
  Timeline timeline = sc.delays.build(losses.horizon(), delay_rng);
  (void)timeline;
  resolve_comparator(sc, losses, geometry,
                     sc.algorithm == AlgorithmKind::kDoda
                         ? zeros(static_cast<std::size_t>(geometry.dim()))
                         : geometry.prior_point());
}

// ---- Emitters ----

std::string emit_csv(const RunReport& rep) {
  std::string out = "t,agent,loss,inst_regret,cum_regret,eta,eta_tilde,lambda_hat,rho,bound_id,bound_rhs\n";
  for (const ReportRow& r : rep.rows) {
    out += std::to_string(r.t);
    out += ',';
    out += std::to_string(r.agent);
    out += ',';
    out += format_double(r.loss);
    out += ',';
    out += format_double(r.inst_regret);
    out += ',';
    out += format_double(r.cum_regret);
    out += ',';
    out += format_double(r.eta);
    out += ',';
    if (r.has_eta_tilde) out += format_double(r.eta_tilde);
    out += ',';
    if (r.has_lambda_hat) out += format_double(r.lambda_hat);
    out += ',';
    if (r.has_rho) out += std::to_string(r.rho);
    out += ",,\n";
  }
  for (const BoundCheck& bc : rep.bounds) {
    out += ",,,,,,,,," + bc.id + "," + format_double(bc.rhs) + "\n";
  }
  return out;
}

std::string emit_plotdata(const RunReport& rep) {
  std::string out = "# t regret bound\n";
  const bool has_bound = !rep.bounds.empty();
  for (const ReportRow& r : rep.rows) {
    out += std::to_string(r.t);
    out += ' ';
    out += format_double(r.cum_regret);
    if (has_bound) {
      out += ' ';
      out += format_double(rep.bounds.front().rhs);
    }
    out += '\n';
  }
  return out;
}

std::string emit_summary(const RunReport& rep) {
  std::ostringstream out;
  out << "scenario: " << rep.scenario_name << "\n";
  out << "algorithm: " << algorithm_name(rep.algorithm) << "\n";
  out << "rows: " << rep.rows.size() << "\n";
  out << "regret: " << format_double(rep.regret) << "\n";
  if (rep.algorithm == AlgorithmKind::kDdda) {
    out << "collective_regret: " << format_double(rep.collective_regret) << "\n";
    out << "discrepancy: " << format_double(rep.discrepancy) << "\n";
  } else {
    out << "linearized_regret: " << format_double(rep.linearized_regret) << "\n";
  }
  out << "comparator:";
  for (double c : rep.comparator.point) out << ' ' << format_double(c);
  out << "\n";
  if (!rep.comparator.exact) {
    out << "comparator_gap: " << format_double(rep.comparator.gap) << "\n";
  }
  if (!rep.comparator.note.empty()) out << "comparator_note: " << rep.comparator.note << "\n";
  out << "max_delay: " << rep.stats.max_delay << "\n";
  if (rep.algorithm != AlgorithmKind::kDdda) {
    out << "max_unavailability: " << rep.stats.max_unavailability << "\n";
    if (!rep.stats.cumulative_unavailability.empty()) {
      out << "total_unavailability: " << rep.stats.cumulative_unavailability.back() << "\n";
    }
    if (!rep.stats.lag.empty()) out << "lag: " << format_double(rep.stats.lag.back()) << "\n";
  }
  for (const BoundCheck& bc : rep.bounds) {
    out << "bound " << bc.id << ": measured=" << format_double(bc.measured)
        << " rhs=" << format_double(bc.rhs) << " slack=" << format_double(bc.slack) << " "
        << (bc.satisfied ? "ok" : "VIOLATED") << "\n";
  }
  out << "result: " << (rep.all_bounds_hold ? "PASS" : "FAIL") << "\n";
  return out.str();
}

// ---- Suites ----

namespace {

void add_check(SuiteReport& rep, const std::string& label, bool ok, const std::string& detail,
               const Scenario* offending = nullptr) {
  SuiteCheck c;
  c.label = label;
  c.passed = ok;
  c.detail = detail;
  if (!ok && offending != nullptr) {
    c.detail += "\noffending scenario:\n" + scenario_to_text(*offending);
  }
  rep.checks.push_back(c);
  if (!ok) rep.passed = false;
}

void add_bound_check(SuiteReport& rep, const std::string& label, const BoundCheck& bc,
                     const Scenario* offending = nullptr) {
  add_check(rep, label, bc.satisfied,
            "measured=" + format_double(bc.measured) + " rhs=" + format_double(bc.rhs), offending);
}

Scenario base_ball_scenario(std::uint64_t seed) {
  Scenario sc;
  sc.horizon = 200;
  sc.algorithm = AlgorithmKind::kDda;
  sc.seed = seed;
  sc.geometry.kind = "ball";
  sc.geometry.dim = 4;
  sc.geometry.radius = 1.0;
  sc.losses.kind = "random_linear";
  sc.losses.G = 1.0;
  sc.delays.kind = "geometric";
  sc.delays.p = 0.35;
  sc.delays.cap = 10;
  sc.rate.R = 1.0;
  sc.rate.G = 1.0;
  sc.name = "ball-linear-" + std::to_string(seed);
  return sc;
}

SuiteReport suite_cor2_regimes() {
  SuiteReport rep;
  rep.name = "cor2_regimes";
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    // Probe the delay measures first; linear losses make them rate-free.
    Scenario sc = base_ball_scenario(seed);
    Geometry geometry = sc.geometry.build();
    SplitMix64 root(sc.seed);
    SplitMix64 loss_rng = root.split();
    SplitMix64 delay_rng = root.split();
    LossSequence losses = sc.losses.build(sc.geometry, sc.horizon, loss_rng);
    Timeline timeline = sc.delays.build(sc.horizon, delay_rng);
    std::vector<double> norms(static_cast<std::size_t>(sc.horizon) + 1, 0.0);
    for (int t = 1; t <= sc.horizon; ++t) {
      norms[static_cast<std::size_t>(t)] = geometry.dual_norm(losses.at(t).linear_gradient());
    }
    const DelayStats stats = delay_stats(timeline, norms);
    const double T = static_cast<double>(sc.horizon);
    const double O = static_cast<double>(stats.max_unavailability);
    const double D = static_cast<double>(stats.cumulative_unavailability.back());
    const double lag = stats.lag.back();
    const std::string tag = "seed=" + std::to_string(seed);

    struct Regime {
      const char* id;
      double eta;
    };
    const Regime regimes[] = {
        {"regime_unavail", 1.0 / std::sqrt((1.0 + 2.0 * O) * T)},
        {"regime_total_delay", 1.0 / std::sqrt(T + 2.0 * D)},
        {"regime_lag", 1.0 / std::sqrt(lag)},
    };
    for (const Regime& regime : regimes) {
      Scenario run = sc;
      run.rate.kind = "constant";
      run.rate.eta = regime.eta;
      run.bound_checks = {regime.id};
      const RunReport r = run_scenario(run);
      add_bound_check(rep, tag + " " + regime.id, r.bounds.front(), &run);
    }
    Scenario run = sc;
    run.rate.kind = "decreasing";
    run.rate.tau = stats.max_delay;
    run.bound_checks = {"decreasing", "time_ordered"};
    const RunReport r = run_scenario(run);
    add_bound_check(rep, tag + " decreasing", r.bounds[0], &run);
    add_bound_check(rep, tag + " time_ordered", r.bounds[1], &run);
  }
  return rep;
}

SuiteReport suite_optimistic_separation() {
  SuiteReport rep;
  rep.name = "optimistic_separation";
  // Matched-rate runs against the shifted-variation bound, on both
  // adversarial generators.
  for (int tau = 1; tau <= 2; ++tau) {
    for (int m = 2; m <= 8; ++m) {
      if (m <= tau) continue;  // generator precondition
      const int len = 3 * (tau + 1) * (tau + 1);
      for (const char* kind : {"periods", "zero_one"}) {
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
        sc.comparator.radius = 1.0;
        sc.bound_checks = {"optimistic_variation", "optimistic_gap"};
        sc.name = std::string(kind) + "-m" + std::to_string(m) + "-tau" + std::to_string(tau);
        const RunReport r = run_scenario(sc);
        add_bound_check(rep, sc.name + " variation", r.bounds[0], &sc);
        add_bound_check(rep, sc.name + " gap", r.bounds[1], &sc);
        // The generators promise an exact shifted variation.
        SplitMix64 dummy(0);
        const LossSequence seq = sc.losses.build(sc.geometry, 0, dummy);
        const double v = variation(seq, tau + 1);
        const double expected = static_cast<double>((8 * m + 1) * (tau + 1));
        add_check(rep, sc.name + " variation_exact", v == expected,
                  "variation=" + format_double(v) + " expected=" + format_double(expected));
      }
    }
  }
  // Single-rate failure against the dual-rate method on paired comparators.
  for (int m : {3, 5, 9}) {
    const int tau = 1;
    const int len = lb_preset_len(m, tau);
    const LossSequence seq = gen_lb_seq_zero_one(m, len, tau);
    const int T = seq.horizon();
    const double v = variation(seq, tau + 1);
    const double eta = 1.0 / std::sqrt((2.0 * tau + 1.0) * v);

    Scenario paired_dump;
    auto run_with = [&](const char* kind, double eta_run, double eta_tilde_run,
                        double comparator_point) {
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
      sc.rate.eta = eta_run;
      sc.rate.eta_tilde = eta_tilde_run;
      sc.rate.R = 1.0;
      sc.rate.tau = tau;
      sc.rate.strict_scale = false;
      sc.comparator.kind = "point";
      sc.comparator.point = {comparator_point};
      sc.name = "paired-m" + std::to_string(m);
      paired_dump = sc;
      return run_scenario(sc);
    };

    // Same horizon and shifted variation, different sequences: the shared
    // learning rate cannot track both.
    const double r1 = run_with("periods", eta, eta, 0.0).regret;
    const double r2 = run_with("zero_one", eta, eta, -1.0).regret;
    const double threshold = std::max(v, std::sqrt(static_cast<double>(T))) / 2.0;
    add_check(rep, "paired-m" + std::to_string(m) + " single_rate_lower",
              r1 + r2 >= threshold,
              "sum=" + format_double(r1 + r2) + " threshold=" + format_double(threshold),
              &paired_dump);

    // The two-rate method stays inside its bound on both sequences at once.
    for (const char* kind : {"periods", "zero_one"}) {
      Scenario dual;
      dual.algorithm = AlgorithmKind::kDoda;
      dual.geometry.kind = "free";
      dual.geometry.dim = 1;
      dual.losses.kind = kind;
      dual.losses.m = m;
      dual.losses.len = len;
      dual.losses.tau = tau;
      dual.delays.kind = "constant";
      dual.delays.tau = tau;
      dual.guess = "last";
      dual.rate.kind = "pair";
      dual.rate.R = 1.0;
      dual.rate.tau = tau;
      dual.comparator.radius = 1.0;
      dual.bound_checks = {"optimistic_variation"};
      dual.name = "paired-m" + std::to_string(m) + "-dual-" + kind;
      const RunReport dual_report = run_scenario(dual);
      add_bound_check(rep, dual.name + " within_bound", dual_report.bounds.front(), &dual);
    }
  }
  return rep;
}

SuiteReport suite_network_bounds() {
  SuiteReport rep;
  rep.name = "network_bounds";
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
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
    sc.name = "net-" + std::to_string(seed);

    // The uniform latency is the slot-level delay bound the rates need.
    sc.rate.tau = sc.network.latency;
    const std::string tag = "seed=" + std::to_string(seed);

    Scenario fixed = sc;
    fixed.rate.kind = "fixed";
    fixed.bound_checks = {"network_fixed", "network_discrepancy"};
    const RunReport rf = run_scenario(fixed);
    add_bound_check(rep, tag + " network_fixed", rf.bounds[0], &fixed);
    add_bound_check(rep, tag + " network_discrepancy", rf.bounds[1], &fixed);

    Scenario card = sc;
    card.rate.kind = "global_card";
    card.bound_checks = {"network_card"};
    const RunReport rc = run_scenario(card);
    add_bound_check(rep, tag + " network_card", rc.bounds[0], &card);
  }
  return rep;
}

SuiteReport suite_adaptive_lemma() {
  SuiteReport rep;
  rep.name = "adaptive_lemma";
  SplitMix64 rng(2024);
  int failures = 0;
  std::string first_failure;
  for (int case_id = 0; case_id < 1000; ++case_id) {
    const int n = 1 + static_cast<int>(rng.next_below(40));
    std::vector<double> a(static_cast<std::size_t>(n));
    double prefix = 0.0;
    for (int k = 0; k < n; ++k) {
      double v = 2.0 * rng.next_double() - 0.3;
      if (prefix + v <= 0.01) v = std::abs(v) + 0.01;
      a[static_cast<std::size_t>(k)] = v;
      prefix += v;
    }
    double lhs = 0.0;
    double run = 0.0;
    for (int k = 0; k < n; ++k) {
      run += a[static_cast<std::size_t>(k)];
      lhs += a[static_cast<std::size_t>(k)] / std::sqrt(run);
    }
    const double rhs = 2.0 * std::sqrt(run);
    if (!(lhs <= rhs + 1e-12)) {
      ++failures;
      if (first_failure.empty()) {
        first_failure = "case " + std::to_string(case_id) + ": lhs=" + format_double(lhs) +
                        " rhs=" + format_double(rhs);
      }
    }
    if ((case_id + 1) % 100 == 0) {
      add_check(rep, "cases " + std::to_string(case_id - 99) + ".." + std::to_string(case_id),
                failures == 0, failures == 0 ? "100 sequences" : first_failure);
      failures = 0;
      first_failure.clear();
    }
  }
  return rep;
}

}  // namespace

const std::vector<std::string>& all_suite_names() {
  static const std::vector<std::string> names = {"cor2_regimes", "optimistic_separation",
                                                 "network_bounds", "adaptive_lemma"};
  return names;
}

SuiteReport run_suite(const std::string& name) {
  if (name == "cor2_regimes") return suite_cor2_regimes();
  if (name == "optimistic_separation") return suite_optimistic_separation();
  if (name == "network_bounds") return suite_network_bounds();
  if (name == "adaptive_lemma") return suite_adaptive_lemma();
  throw ConfigError("unknown suite '" + name + "'");
}

}  // namespace delopt
