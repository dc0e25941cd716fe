#include "leadsel/harness.hpp"

#include "leadsel/dynamics.hpp"
#include "leadsel/errors.hpp"
#include "leadsel/expm.hpp"
#include "leadsel/static_selection.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <condition_variable>
#include <cstdlib>
#include <fstream>
#include <map>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

namespace leadsel {

std::string_view to_string(ExperimentKind k) {
  switch (k) {
    case ExperimentKind::static_k: return "static_k";
    case ExperimentKind::static_alpha: return "static_alpha";
    case ExperimentKind::link_failure: return "link_failure";
    case ExperimentKind::waypoint: return "waypoint";
    case ExperimentKind::regret_lower_bound: return "regret_lower_bound";
  }
  return "?";
}

std::string_view to_string(HorizonRule r) { return r == HorizonRule::beta ? "beta" : "fixed"; }

std::vector<std::string> valid_policies(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::static_k:
    case ExperimentKind::static_alpha:
      return {"supermodular", "random", "max_degree", "average_degree"};
    case ExperimentKind::link_failure:
    case ExperimentKind::waypoint:
      return {"supermodular_known", "supermodular_dynamic", "random", "max_degree", "average_degree"};
    case ExperimentKind::regret_lower_bound:
      return {"random", "experts"};
  }
  return {};
}

std::vector<std::string> active_policies(const ExperimentConfig& config) {
  return config.policies.empty() ? valid_policies(config.kind) : config.policies;
}

// ---------------------------------------------------------------------------
// Configuration

namespace {

class ConfigReader {
 public:
  ConfigReader(const Json& raw, std::vector<std::string>& problems) : raw_(raw), problems_(problems) {}

  const Json* find(const char* key) {
    known_.insert(key);
    if (!raw_.is_object() || !raw_.contains(key)) return nullptr;
    return &raw_.at(key);
  }

  void number(const char* key, double& out, bool (*ok)(double), const char* range) {
    const Json* v = find(key);
    if (v == nullptr) return;
    if (!v->is_number()) return fail(key, "must be a number");
    const double x = v->get<double>();
    if (!std::isfinite(x) || !ok(x)) return fail(key, std::string("must be ") + range);
    out = x;
  }

  void count(const char* key, std::size_t& out, std::size_t min) {
    const Json* v = find(key);
    if (v == nullptr) return;
    if (!v->is_number_integer()) return fail(key, "must be an integer");
    const long long x = v->get<long long>();
    if (x < static_cast<long long>(min)) return fail(key, "must be at least " + std::to_string(min));
    out = static_cast<std::size_t>(x);
  }

  void boolean(const char* key, bool& out) {
    const Json* v = find(key);
    if (v == nullptr) return;
    if (!v->is_boolean()) return fail(key, "must be true or false");
    out = v->get<bool>();
  }

  void interval(const char* key, Interval& out) {
    const Json* v = find(key);
    if (v == nullptr) return;
    if (!v->is_array() || v->size() != 2 || !(*v)[0].is_number() || !(*v)[1].is_number()) {
      return fail(key, "must be a two-element array [lo, hi]");
    }
    const double lo = (*v)[0].get<double>();
    const double hi = (*v)[1].get<double>();
    if (!(lo >= 0.0) || !(hi >= lo) || !std::isfinite(hi)) return fail(key, "needs 0 <= lo <= hi");
    out = {lo, hi};
  }

  template <class T, class Check>
  void list(const char* key, std::vector<T>& out, Check ok, const char* range) {
    const Json* v = find(key);
    if (v == nullptr) return;
    if (!v->is_array() || v->empty()) return fail(key, "must be a nonempty array");
    std::vector<T> items;
    for (const auto& item : *v) {
      if constexpr (std::is_integral_v<T>) {
        if (!item.is_number_integer()) return fail(key, "must hold integers");
        const long long x = item.get<long long>();
        if (x < 0 || !ok(static_cast<double>(x))) return fail(key, std::string("entries must be ") + range);
        items.push_back(static_cast<T>(x));
      } else {
        if (!item.is_number()) return fail(key, "must hold numbers");
        const double x = item.get<double>();
        if (!std::isfinite(x) || !ok(x)) return fail(key, std::string("entries must be ") + range);
        items.push_back(x);
      }
    }
    out = std::move(items);
  }

  template <class Parse>
  void choice(const char* key, Parse parse) {
    const Json* v = find(key);
    if (v == nullptr) return;
    if (!v->is_string()) return fail(key, "must be a string");
    if (!parse(v->get<std::string>())) fail(key, "unrecognized value '" + v->get<std::string>() + "'");
  }

  void fail(const std::string& key, const std::string& what) { problems_.push_back(key + ": " + what); }

  void unknown_keys() {
    if (!raw_.is_object()) {
      if (!raw_.is_null()) problems_.push_back("configuration must be a JSON object");
      return;
    }
    for (const auto& [key, value] : raw_.items()) {
      if (!known_.count(key)) problems_.push_back(key + ": unknown key");
    }
  }

 private:
  const Json& raw_;
  std::vector<std::string>& problems_;
  std::set<std::string> known_;
};

}  // namespace

ExperimentConfig validate_config(const Json& raw) {
  ExperimentConfig c;
  std::vector<std::string> problems;
  ConfigReader r(raw, problems);

  r.choice("kind", [&](const std::string& s) {
    for (auto k : {ExperimentKind::static_k, ExperimentKind::static_alpha, ExperimentKind::link_failure,
                   ExperimentKind::waypoint, ExperimentKind::regret_lower_bound}) {
      if (s == to_string(k)) {
        c.kind = k;
        return true;
      }
    }
    return false;
  });
  r.count("n", c.n, 2);
  r.number("area_side", c.area_side, [](double x) { return x > 0.0; }, "positive");
  r.number("comm_range", c.comm_range, [](double x) { return x > 0.0; }, "positive");
  r.interval("weights", c.weights);
  r.boolean("symmetric_weights", c.symmetric_weights);
  r.number("p", c.p, [](double x) { return x >= 1.0; }, "at least 1");
  r.choice("horizon_rule", [&](const std::string& s) {
    if (s == "beta") c.horizon_rule = HorizonRule::beta;
    else if (s == "fixed") c.horizon_rule = HorizonRule::fixed;
    else return false;
    return true;
  });
  r.number("horizon_beta", c.horizon_beta, [](double x) { return x > 0.0; }, "positive");
  r.number("horizon_t", c.horizon_t, [](double x) { return x > 0.0; }, "positive");
  r.count("horizon_set_size", c.horizon_set_size, 1);
  r.list("k_values", c.k_values, [](double x) { return x >= 1.0; }, "at least 1");
  r.list("alpha_values", c.alpha_values, [](double x) { return x >= 0.0; }, "nonnegative");
  r.count("k", c.k, 1);
  r.list("fail_probs", c.fail_probs, [](double x) { return x >= 0.0 && x < 1.0; }, "in [0, 1)");
  r.count("epochs", c.epochs, 1);
  r.number("ref_speed", c.ref_speed, [](double x) { return x >= 0.0; }, "nonnegative");
  r.interval("disturbance", c.disturbance);
  r.number("experts_beta", c.experts_beta, [](double x) { return x > 0.0 && x <= 1.0; }, "in (0, 1]");
  r.choice("exponent_mode", [&](const std::string& s) {
    try {
      c.exponent_mode = parse_exponent_mode(s);
      return true;
    } catch (const DomainError&) {
      return false;
    }
  });
  if (const Json* eta = r.find("eta"); eta != nullptr && !eta->is_null()) {
    if (!eta->is_number()) r.fail("eta", "must be a number or null");
    else if (double x = eta->get<double>(); !(x >= 0.0 && x <= 1.0)) r.fail("eta", "must be in [0, 1]");
    else c.eta = x;
  }
  r.count("mc_samples", c.mc_samples, 1);
  r.count("regret_r", c.regret_r, 1);
  r.number("sigma", c.sigma, [](double x) { return x >= 0.0 && x <= 1.0; }, "in [0, 1]");
  r.count("initial_states", c.initial_states, 1);
  if (const Json* pol = r.find("policies"); pol != nullptr) {
    if (!pol->is_array() || !std::all_of(pol->begin(), pol->end(), [](const Json& x) { return x.is_string(); })) {
      r.fail("policies", "must be an array of strings");
    } else {
      c.policies.clear();
      for (const auto& x : *pol) c.policies.push_back(x.get<std::string>());
    }
  }
  r.count("trials", c.trials, 1);
  if (const Json* seed = r.find("seed"); seed != nullptr) {
    if (!seed->is_number_unsigned() && !(seed->is_number_integer() && seed->get<long long>() >= 0)) {
      r.fail("seed", "must be a nonnegative integer");
    } else {
      c.seed = seed->get<std::uint64_t>();
    }
  }
  if (const Json* out = r.find("output"); out != nullptr) {
    if (!out->is_string()) r.fail("output", "must be a string");
    else c.output = out->get<std::string>();
  }
  r.unknown_keys();

  // Cross-field checks, only for the fields the kind reads.
  const bool dynamic = c.kind == ExperimentKind::link_failure || c.kind == ExperimentKind::waypoint;
  if (c.kind == ExperimentKind::static_k) {
    for (auto k : c.k_values) {
      if (k > c.n) {
        r.fail("k_values", "entry " + std::to_string(k) + " exceeds n = " + std::to_string(c.n));
        break;
      }
    }
  }
  if (dynamic && c.k > c.n) r.fail("k", "exceeds n = " + std::to_string(c.n));
  if (c.kind != ExperimentKind::regret_lower_bound && c.horizon_set_size >= c.n) {
    r.fail("horizon_set_size", "must be below n");
  }
  const auto valid = valid_policies(c.kind);
  std::set<std::string> seen;
  for (const auto& p : c.policies) {
    if (std::find(valid.begin(), valid.end(), p) == valid.end()) {
      r.fail("policies", "'" + p + "' is not a policy of " + std::string(to_string(c.kind)));
    } else if (!seen.insert(p).second) {
      r.fail("policies", "'" + p + "' listed twice");
    }
  }

  if (!problems.empty()) throw ValidationError(std::move(problems));
  return c;
}

Json config_to_json(const ExperimentConfig& c) {
  Json j;
  j["kind"] = to_string(c.kind);
  j["n"] = c.n;
  j["area_side"] = c.area_side;
  j["comm_range"] = c.comm_range;
  j["weights"] = {c.weights.lo, c.weights.hi};
  j["symmetric_weights"] = c.symmetric_weights;
  j["p"] = c.p;
  j["horizon_rule"] = to_string(c.horizon_rule);
  j["horizon_beta"] = c.horizon_beta;
  j["horizon_t"] = c.horizon_t;
  j["horizon_set_size"] = c.horizon_set_size;
  j["k_values"] = c.k_values;
  j["alpha_values"] = c.alpha_values;
  j["k"] = c.k;
  j["fail_probs"] = c.fail_probs;
  j["epochs"] = c.epochs;
  j["ref_speed"] = c.ref_speed;
  j["disturbance"] = {c.disturbance.lo, c.disturbance.hi};
  j["experts_beta"] = c.experts_beta;
  j["exponent_mode"] = to_string(c.exponent_mode);
  j["eta"] = c.eta ? Json(*c.eta) : Json(nullptr);
  j["mc_samples"] = c.mc_samples;
  j["regret_r"] = c.regret_r;
  j["sigma"] = c.sigma;
  j["initial_states"] = c.initial_states;
  j["policies"] = active_policies(c);
  j["trials"] = c.trials;
  j["seed"] = c.seed;
  j["output"] = c.output;
  return j;
}

Json apply_scale(Json raw, std::string_view scale) {
  if (scale != "desk" && scale != "paper") throw ValidationError({"scale: must be desk or paper"});
  if (raw.is_null()) raw = Json::object();
  if (scale == "desk" && raw.is_object()) {
    if (!raw.contains("n")) raw["n"] = 50;
    if (!raw.contains("trials")) raw["trials"] = 20;
  }
  return raw;
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

std::uint64_t trial_seed(std::uint64_t master, std::size_t trial) {
  return splitmix64(splitmix64(master) ^ static_cast<std::uint64_t>(trial));
}

// ---------------------------------------------------------------------------
// Rows

const std::vector<std::string>& result_header() {
  static const std::vector<std::string> header{"trial",   "seed",           "policy",      "sweep",
                                               "num_leaders", "leaders",    "bound",       "realized_error",
                                               "evaluations", "wall_time_s"};
  return header;
}

std::vector<std::string> format_row(const ResultRow& r) {
  return {std::to_string(r.trial), std::to_string(r.seed), r.policy,
          format_double(r.sweep), std::to_string(r.num_leaders), r.leaders,
          format_double(r.bound), format_double(r.realized_error), std::to_string(r.evaluations),
          format_double(r.wall_time_s)};
}

std::size_t rows_per_trial(const ExperimentConfig& c) {
  const std::size_t policies = active_policies(c).size();
  switch (c.kind) {
    case ExperimentKind::static_k: return c.k_values.size() * policies;
    case ExperimentKind::static_alpha: return c.alpha_values.size() * policies;
    case ExperimentKind::link_failure: return c.fail_probs.size() * policies;
    case ExperimentKind::waypoint: return c.epochs * policies;
    case ExperimentKind::regret_lower_bound: return policies;
  }
  return 0;
}

// ---------------------------------------------------------------------------
// Trials

namespace {

enum class Stream : std::uint64_t {
  topology = 1,
  horizon,
  states,
  baseline,
  sequence,
  known,
  dynamic,
  adversary,
};

Rng substream(std::uint64_t seed, Stream purpose, std::uint64_t index = 0) {
  return Rng(splitmix64(seed ^ splitmix64(static_cast<std::uint64_t>(purpose) << 32 | index)));
}

class Stopwatch {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

GeometricParams geometric_params(const ExperimentConfig& c) {
  GeometricParams g;
  g.n = c.n;
  g.area_side = c.area_side;
  g.comm_range = c.comm_range;
  g.weights = c.weights;
  g.symmetric_weights = c.symmetric_weights;
  return g;
}

WaypointParams waypoint_params(const ExperimentConfig& c) {
  WaypointParams w;
  w.n = c.n;
  w.area_side = c.area_side;
  w.comm_range = c.comm_range;
  w.ref_speed = c.ref_speed;
  w.disturbance = c.disturbance;
  w.weights = c.weights;
  w.symmetric_weights = c.symmetric_weights;
  return w;
}

LeaderSet random_subset(std::size_t n, std::size_t size, Rng& rng) {
  std::vector<NodeId> all(n);
  for (NodeId v = 0; v < n; ++v) all[v] = v;
  std::shuffle(all.begin(), all.end(), rng);
  all.resize(size);
  return LeaderSet(std::move(all));
}

double choose_horizon(const ExperimentConfig& c, const Topology& topo, std::uint64_t seed) {
  if (c.horizon_rule == HorizonRule::fixed) return c.horizon_t;
  Rng rng = substream(seed, Stream::horizon);
  return horizon_for_bound(topo, random_subset(topo.size(), c.horizon_set_size, rng), c.p, c.horizon_beta);
}

// Initial states: raw draws z ~ U(-1, 1)^n. For a leader set S the state is z
// with leader entries set to the common anchor 0 and followers rescaled to
// unit q-norm, so every policy sees the same directions.
class InitialStates {
 public:
  InitialStates(std::size_t n, std::size_t count, double p, std::uint64_t seed) : q_(conjugate_exponent(p)) {
    Rng rng = substream(seed, Stream::states);
    std::uniform_real_distribution<double> unif(-1.0, 1.0);
    for (std::size_t s = 0; s < count; ++s) {
      Eigen::VectorXd z(static_cast<Eigen::Index>(n));
      for (Eigen::Index i = 0; i < z.size(); ++i) z[i] = unif(rng);
      raw_.push_back(std::move(z));
    }
  }

  Eigen::VectorXd state(std::size_t sample, const LeaderSet& leaders) const {
    Eigen::VectorXd x = raw_[sample];
    for (NodeId j : leaders) x[static_cast<Eigen::Index>(j)] = 0.0;
    double norm = 0.0;
    if (std::isinf(q_)) {
      norm = x.cwiseAbs().maxCoeff();
    } else {
      for (Eigen::Index i = 0; i < x.size(); ++i) norm += std::pow(std::abs(x[i]), q_);
      norm = std::pow(norm, 1.0 / q_);
    }
    if (norm > 0.0) x /= norm;
    return x;
  }

  std::size_t size() const noexcept { return raw_.size(); }

 private:
  double q_;
  std::vector<Eigen::VectorXd> raw_;
};

double nan() { return std::numeric_limits<double>::quiet_NaN(); }

// Mean realized error at the horizon for a fixed leader set on one topology.
double realized_static(const ErrorEvaluator& eval, const LeaderSet& s, const InitialStates& states) {
  if (s.empty()) return nan();
  const Eigen::MatrixXd p = eval.transition(s);
  const auto config = LeaderConfig::uniform(s, 0.0);
  double sum = 0.0;
  for (std::size_t k = 0; k < states.size(); ++k) {
    sum += containment_error(config, p * states.state(k, s), eval.p());
  }
  return sum / static_cast<double>(states.size());
}

// Propagates each initial state through the epochs with per-epoch leader
// sets; returns the mean containment error after each epoch.
std::vector<double> realized_switching(const EpochSequence& seq, std::span<const LeaderSet> sets,
                                       const InitialStates& states, double p) {
  std::vector<double> out(seq.size(), 0.0);
  std::vector<Eigen::VectorXd> xs;
  for (std::size_t k = 0; k < states.size(); ++k) xs.push_back(states.state(k, sets.front()));
  for (std::size_t m = 0; m < seq.size(); ++m) {
    const Eigen::MatrixXd pm = expm_neg(build_laplacian(seq[m].topology, sets[m]), seq[m].dwell);
    const auto config = LeaderConfig::uniform(sets[m], 0.0);
    double sum = 0.0;
    for (auto& x : xs) {
      for (NodeId j : sets[m]) x[static_cast<Eigen::Index>(j)] = 0.0;
      x = pm * x;
      sum += containment_error(config, x, p);
    }
    out[m] = sets[m].empty() ? nan() : sum / static_cast<double>(xs.size());
  }
  return out;
}

struct TrialContext {
  const ExperimentConfig& c;
  std::size_t trial;
  std::uint64_t seed;
  std::vector<std::string> policies;

  ResultRow row(const std::string& policy, double sweep) const {
    ResultRow r;
    r.trial = trial;
    r.seed = seed;
    r.policy = policy;
    r.sweep = sweep;
    return r;
  }
};

void fill_set(ResultRow& r, std::span<const NodeId> leaders) {
  r.num_leaders = leaders.size();
  r.leaders = format_leaders(leaders);
}

std::size_t policy_index(const std::string& policy) {
  static const std::vector<std::string> all{"supermodular", "random", "max_degree", "average_degree",
                                            "supermodular_known", "supermodular_dynamic", "experts"};
  return static_cast<std::size_t>(std::find(all.begin(), all.end(), policy) - all.begin());
}

// Baseline orders are drawn once per (trial, policy) so random sets are nested across the sweep.
std::map<std::string, std::vector<NodeId>> baseline_orders(const TrialContext& ctx, const Topology& topo) {
  std::map<std::string, std::vector<NodeId>> orders;
  for (const auto& policy : ctx.policies) {
    if (policy == "random" || policy == "max_degree" || policy == "average_degree") {
      Rng rng = substream(ctx.seed, Stream::baseline, policy_index(policy));
      orders[policy] = baseline_order(topo, parse_baseline(policy), rng);
    }
  }
  return orders;
}

std::vector<ResultRow> static_trial(const TrialContext& ctx) {
  const auto& c = ctx.c;
  Rng topo_rng = substream(ctx.seed, Stream::topology);
  const Topology topo = gen_geometric(geometric_params(c), topo_rng);
  const ErrorEvaluator eval(topo, choose_horizon(c, topo, ctx.seed), c.p);
  const InitialStates states(c.n, c.initial_states, c.p, ctx.seed);
  const auto orders = baseline_orders(ctx, topo);

  std::vector<ResultRow> rows;
  const bool by_k = c.kind == ExperimentKind::static_k;
  const std::size_t sweeps = by_k ? c.k_values.size() : c.alpha_values.size();
  for (std::size_t s = 0; s < sweeps; ++s) {
    const double sweep = by_k ? static_cast<double>(c.k_values[s]) : c.alpha_values[s];
    for (const auto& policy : ctx.policies) {
      const Stopwatch clock;
      SelectionResult sel;
      if (policy == "supermodular") {
        sel = by_k ? select_k_leaders(eval, c.k_values[s]) : select_minimal_leaders(eval, c.alpha_values[s]);
      } else if (by_k) {
        const auto& order = orders.at(policy);
        sel.leaders.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(c.k_values[s]));
        sel.objective = eval(sel.set());
        sel.evaluations = 1;
      } else {
        sel = fill_until(eval, orders.at(policy), c.alpha_values[s]);
      }
      ResultRow r = ctx.row(policy, sweep);
      fill_set(r, sel.leaders);
      r.bound = sel.objective;
      r.evaluations = sel.evaluations;
      r.realized_error = realized_static(eval, sel.set(), states);
      r.wall_time_s = clock.seconds();
      rows.push_back(std::move(r));
    }
  }
  return rows;
}

// Known-distribution objective: average bound over independent draws from the
// same topology model.
AverageObjective known_objective(std::size_t samples, double horizon, double p,
                                 const std::function<Topology(Rng&)>& draw, Rng& rng) {
  std::vector<std::shared_ptr<const SetObjective>> parts;
  for (std::size_t s = 0; s < samples; ++s) parts.push_back(std::make_shared<ErrorEvaluator>(draw(rng), horizon, p));
  return AverageObjective(std::move(parts));
}

struct PolicyRun {
  std::vector<LeaderSet> sets;  // one per epoch
  std::vector<NodeId> last;     // last epoch's leaders in selection order
  std::size_t evaluations = 0;
  double wall_time_s = 0.0;
};

PolicyRun run_policy(const TrialContext& ctx, const std::string& policy, const EpochSequence& seq,
                     const std::map<std::string, std::vector<NodeId>>& orders,
                     const std::function<AverageObjective(Rng&)>& known, std::uint64_t index) {
  const auto& c = ctx.c;
  const Stopwatch clock;
  PolicyRun run;
  if (policy == "supermodular_known") {
    Rng rng = substream(ctx.seed, Stream::known, index);
    const AverageObjective objective = known(rng);
    const auto sel = select_k_leaders(objective, c.k);
    run.sets.assign(seq.size(), sel.set());
    run.last = sel.leaders;
    run.evaluations = sel.evaluations;
  } else if (policy == "supermodular_dynamic") {
    Rng rng = substream(ctx.seed, Stream::dynamic, index);
    ExpertsState state(c.n, {c.k, c.p, c.experts_beta, c.exponent_mode});
    for (std::size_t m = 0; m < seq.size(); ++m) {
      const Topology* observed = m == 0 ? nullptr : &seq[m - 1].topology;
      run.last = select_dynamic_leaders(state, observed, m == 0 ? 0.0 : seq[m - 1].dwell, rng);
      run.sets.emplace_back(run.last);
      if (m > 0) run.evaluations += c.k * c.n + 1;
    }
  } else {
    const auto& order = orders.at(policy);
    run.last.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(c.k));
    run.sets.assign(seq.size(), LeaderSet(run.last));
  }
  run.wall_time_s = clock.seconds();
  return run;
}

std::vector<ResultRow> link_failure_trial(const TrialContext& ctx) {
  const auto& c = ctx.c;
  Rng topo_rng = substream(ctx.seed, Stream::topology);
  const Topology base = gen_geometric(geometric_params(c), topo_rng);
  const double horizon = choose_horizon(c, base, ctx.seed);
  const InitialStates states(c.n, c.initial_states, c.p, ctx.seed);
  const auto orders = baseline_orders(ctx, base);

  std::vector<ResultRow> rows;
  for (std::size_t s = 0; s < c.fail_probs.size(); ++s) {
    const double q = c.fail_probs[s];
    Rng seq_rng = substream(ctx.seed, Stream::sequence, s);
    const EpochSequence seq = gen_link_failures(base, q, c.epochs, horizon, seq_rng);
    auto known = [&](Rng& rng) {
      return known_objective(c.mc_samples, horizon, c.p, [&](Rng& r) { return fail_links(base, q, r); }, rng);
    };
    for (const auto& policy : ctx.policies) {
      const PolicyRun run = run_policy(ctx, policy, seq, orders, known, s);
      ResultRow r = ctx.row(policy, q);
      fill_set(r, run.last);
      r.bound = per_epoch_metric(seq, run.sets, c.p).average;
      r.realized_error = realized_switching(seq, run.sets, states, c.p).back();
      r.evaluations = run.evaluations;
      r.wall_time_s = run.wall_time_s;
      rows.push_back(std::move(r));
    }
  }
  return rows;
}

std::vector<ResultRow> waypoint_trial(const TrialContext& ctx) {
  const auto& c = ctx.c;
  const WaypointParams params = waypoint_params(c);
  Rng topo_rng = substream(ctx.seed, Stream::topology);

  // Redraw the formation until a sample topology is strongly connected, so
  // the bound-based horizon exists.
  std::optional<WaypointModel> model;
  std::optional<Topology> sample;
  Point start;
  constexpr std::size_t kMaxDraws = 1000;
  for (std::size_t attempt = 0; attempt < kMaxDraws && !model; ++attempt) {
    WaypointModel m = WaypointModel::draw(params, topo_rng);
    std::uniform_real_distribution<double> unif(0.0, c.area_side);
    start = {unif(topo_rng), unif(topo_rng)};
    Topology t = m.topology_at(start, topo_rng);
    if (t.strongly_connected()) {
      model = std::move(m);
      sample = std::move(t);
    }
  }
  if (!model) throw GenerationError("no strongly connected formation found", kMaxDraws);

  const double horizon = choose_horizon(c, *sample, ctx.seed);
  Rng seq_rng = substream(ctx.seed, Stream::sequence);
  const EpochSequence seq = model->simulate(start, c.epochs, horizon, seq_rng);
  const InitialStates states(c.n, c.initial_states, c.p, ctx.seed);
  const auto orders = baseline_orders(ctx, *sample);
  auto known = [&](Rng& rng) {
    return known_objective(
        c.mc_samples, horizon, c.p,
        [&](Rng& r) {
          std::uniform_real_distribution<double> unif(0.0, c.area_side);
          const Point ref{unif(r), unif(r)};
          return model->topology_at(ref, r);
        },
        rng);
  };

  std::vector<std::vector<ResultRow>> by_policy;
  for (const auto& policy : ctx.policies) {
    const PolicyRun run = run_policy(ctx, policy, seq, orders, known, 0);
    const auto terms = per_epoch_metric(seq, run.sets, c.p).terms;
    const auto realized = realized_switching(seq, run.sets, states, c.p);
    std::vector<ResultRow> rows;
    for (std::size_t m = 0; m < seq.size(); ++m) {
      ResultRow r = ctx.row(policy, static_cast<double>(m + 1));
      fill_set(r, run.sets[m].nodes());
      r.bound = terms[m];
      r.realized_error = realized[m];
      r.evaluations = m == 0 ? run.evaluations : 0;
      r.wall_time_s = m == 0 ? run.wall_time_s : 0.0;
      rows.push_back(std::move(r));
    }
    by_policy.push_back(std::move(rows));
  }
  std::vector<ResultRow> rows;
  for (std::size_t m = 0; m < seq.size(); ++m) {
    for (auto& per : by_policy) rows.push_back(std::move(per[m]));
  }
  return rows;
}

std::vector<ResultRow> regret_trial(const TrialContext& ctx) {
  const auto& c = ctx.c;
  std::vector<ResultRow> rows;
  for (const auto& policy : ctx.policies) {
    const Stopwatch clock;
    AdversarialParams params;
    params.n = c.n;
    params.r = c.regret_r;
    params.trials = 1;
    params.sigma = c.sigma;
    params.policy = policy == "experts" ? AdversaryPolicy::experts : AdversaryPolicy::uniform_random;
    params.eta = c.eta;
    // Every policy replays the adversary from the same seed.
    Rng rng = substream(ctx.seed, Stream::adversary);
    const auto report = adversarial_lower_bound_experiment(params, rng);
    ResultRow r = ctx.row(policy, static_cast<double>(c.regret_r));
    r.num_leaders = 1;
    r.bound = report.mean_regret;
    r.realized_error = report.mean_min_a / static_cast<double>(c.regret_r);
    r.wall_time_s = clock.seconds();
    rows.push_back(std::move(r));
  }
  return rows;
}

}  // namespace

std::vector<ResultRow> run_trial(const ExperimentConfig& config, std::size_t trial) {
  const TrialContext ctx{config, trial, trial_seed(config.seed, trial), active_policies(config)};
  switch (config.kind) {
    case ExperimentKind::static_k:
    case ExperimentKind::static_alpha: return static_trial(ctx);
    case ExperimentKind::link_failure: return link_failure_trial(ctx);
    case ExperimentKind::waypoint: return waypoint_trial(ctx);
    case ExperimentKind::regret_lower_bound: return regret_trial(ctx);
  }
  return {};
}

// ---------------------------------------------------------------------------
// Runner

namespace {

ResultRow parse_row(const std::vector<std::string>& f) {
  auto to_d = [](const std::string& s) { return std::stod(s); };
  ResultRow r;
  r.trial = std::stoull(f[0]);
  r.seed = std::stoull(f[1]);
  r.policy = f[2];
  r.sweep = to_d(f[3]);
  r.num_leaders = std::stoull(f[4]);
  r.leaders = f[5];
  r.bound = to_d(f[6]);
  r.realized_error = to_d(f[7]);
  r.evaluations = std::stoull(f[8]);
  r.wall_time_s = to_d(f[9]);
  return r;
}

// Complete trials at the head of an existing results file. Anything after
// the first incomplete trial (a crash mid-write) is discarded.
std::vector<ResultRow> resumable_rows(const std::filesystem::path& path, const ExperimentConfig& c) {
  std::ifstream in(path);
  std::string line;
  if (!in || !std::getline(in, line)) return {};
  std::vector<std::string> header;
  {
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) header.push_back(cell);
  }
  if (header != result_header()) {
    throw SchemaError(path.string() + ": existing file has a different header; refusing to overwrite");
  }
  const std::size_t per_trial = rows_per_trial(c);
  std::vector<ResultRow> kept;
  std::vector<ResultRow> pending;
  std::size_t next_trial = 0;
  while (std::getline(in, line)) {
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) f.push_back(cell);
    if (!line.empty() && line.back() == ',') f.emplace_back();
    if (f.size() != header.size() || in.eof()) break;  // last line without newline is partial
    ResultRow r;
    try {
      r = parse_row(f);
    } catch (const std::exception&) {
      break;
    }
    if (r.trial != next_trial || r.seed != trial_seed(c.seed, r.trial)) break;
    pending.push_back(std::move(r));
    if (pending.size() == per_trial) {
      kept.insert(kept.end(), pending.begin(), pending.end());
      pending.clear();
      ++next_trial;
    }
  }
  return kept;
}

}  // namespace

std::size_t threads_from_env() {
  if (const char* env = std::getenv("LEADSEL_THREADS")) {
    try {
      const long v = std::stol(env);
      if (v >= 1) return static_cast<std::size_t>(v);
    } catch (const std::exception&) {
    }
  }
  return std::max(1U, std::thread::hardware_concurrency());
}

std::vector<ResultRow> run_experiment(const ExperimentConfig& config, const RunOptions& options) {
  const std::size_t total = config.trials;
  const std::size_t per_trial = rows_per_trial(config);

  std::vector<ResultRow> done;
  std::ofstream out;
  if (!config.output.empty()) {
    const std::filesystem::path path(config.output);
    if (options.resume && std::filesystem::exists(path)) done = resumable_rows(path, config);
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    out.open(path, std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    write_csv_line(out, result_header());
    for (const auto& r : done) write_csv_line(out, format_row(r));
    out.flush();
  }
  const std::size_t first = done.size() / std::max<std::size_t>(per_trial, 1);

  std::vector<std::optional<std::vector<ResultRow>>> slots(total);
  std::size_t next_to_write = first;
  std::mutex mu;
  std::exception_ptr failure;
  std::atomic<std::size_t> next_trial{first};

  auto flush_ready = [&] {
    while (next_to_write < total && slots[next_to_write]) {
      for (auto& r : *slots[next_to_write]) {
        if (out.is_open()) write_csv_line(out, format_row(r));
        done.push_back(std::move(r));
      }
      slots[next_to_write].reset();
      ++next_to_write;
      if (out.is_open()) {
        out.flush();
        if (!out) throw std::runtime_error("write failed: " + config.output);
      }
      if (options.progress) options.progress(next_to_write, total);
    }
  };

  auto worker = [&] {
    for (;;) {
      const std::size_t trial = next_trial.fetch_add(1);
      if (trial >= total) return;
      {
        std::lock_guard lock(mu);
        if (failure) return;
      }
      try {
        auto rows = run_trial(config, trial);
        std::lock_guard lock(mu);
        slots[trial] = std::move(rows);
        flush_ready();
      } catch (...) {
        std::lock_guard lock(mu);
        if (!failure) failure = std::current_exception();
        return;
      }
    }
  };

  const std::size_t threads = std::clamp<std::size_t>(options.threads, 1, std::max<std::size_t>(total - first, 1));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
  }
  if (failure) std::rethrow_exception(failure);
  return done;
}

// ---------------------------------------------------------------------------
// Summaries

std::vector<SummaryRow> summarize(const CsvTable& table) {
  std::vector<std::string> missing;
  for (const char* col : {"policy", "sweep", "bound", "num_leaders", "realized_error"}) {
    if (!table.has_column(col)) missing.emplace_back(col);
  }
  if (!missing.empty()) {
    std::string msg = "results file lacks column(s):";
    for (const auto& m : missing) msg += " " + m;
    throw SchemaError(msg);
  }
  const std::size_t ip = table.column("policy");
  const std::size_t is = table.column("sweep");
  const std::size_t ib = table.column("bound");
  const std::size_t il = table.column("num_leaders");
  const std::size_t ir = table.column("realized_error");

  struct Acc {
    std::vector<double> bound, leaders, realized;
  };
  std::vector<std::pair<std::string, std::string>> order;
  std::map<std::pair<std::string, std::string>, Acc> groups;
  for (const auto& row : table.rows) {
    auto key = std::make_pair(row[is], row[ip]);
    auto [it, inserted] = groups.try_emplace(key);
    if (inserted) order.push_back(key);
    it->second.bound.push_back(std::stod(row[ib]));
    it->second.leaders.push_back(std::stod(row[il]));
    it->second.realized.push_back(std::stod(row[ir]));
  }
  auto stats = [](const std::vector<double>& xs) {
    const double n = static_cast<double>(xs.size());
    double mean = 0.0;
    for (double x : xs) mean += x;
    mean /= n;
    if (xs.size() < 2) return std::make_pair(mean, 0.0);
    double ss = 0.0;
    for (double x : xs) ss += (x - mean) * (x - mean);
    return std::make_pair(mean, std::sqrt(ss / (n - 1.0) / n));
  };
  std::vector<SummaryRow> out;
  for (const auto& key : order) {
    const Acc& a = groups.at(key);
    SummaryRow s;
    s.sweep = key.first;
    s.policy = key.second;
    s.count = a.bound.size();
    std::tie(s.bound_mean, s.bound_stderr) = stats(a.bound);
    std::tie(s.leaders_mean, s.leaders_stderr) = stats(a.leaders);
    std::tie(s.realized_mean, s.realized_stderr) = stats(a.realized);
    out.push_back(std::move(s));
  }
  return out;
}

std::vector<SummaryRow> summarize(const std::filesystem::path& results) {
  return summarize(read_csv(results));
}

void write_summary(const std::filesystem::path& path, const std::vector<SummaryRow>& rows) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  write_csv_line(out, {"policy", "sweep", "count", "bound_mean", "bound_stderr", "num_leaders_mean",
                       "num_leaders_stderr", "realized_mean", "realized_stderr"});
  for (const auto& s : rows) {
    write_csv_line(out, {s.policy, s.sweep, std::to_string(s.count), format_double(s.bound_mean),
                         format_double(s.bound_stderr), format_double(s.leaders_mean),
                         format_double(s.leaders_stderr), format_double(s.realized_mean),
                         format_double(s.realized_stderr)});
  }
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

}  // namespace leadsel
