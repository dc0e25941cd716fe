// leadsel: generate topologies, select leaders, run experiment sweeps.

#include "leadsel/dynamics.hpp"
#include "leadsel/errors.hpp"
#include "leadsel/expm.hpp"
#include "leadsel/harness.hpp"
#include "leadsel/io.hpp"
#include "leadsel/static_selection.hpp"
#include "leadsel/walk_oracle.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <iostream>
#include <optional>
#include <sstream>

using namespace leadsel;

namespace {

struct Common {
  std::optional<std::uint64_t> seed;
  std::string out;
  std::optional<double> p;
  std::optional<double> t;
  std::optional<double> alpha;
  std::optional<std::size_t> k;
  std::vector<std::string> policies;
};

void emit(const Json& j, const std::string& out) {
  if (out.empty()) {
    std::cout << j.dump(2) << '\n';
  } else {
    write_json_file(out, j);
  }
}

// --- gen --------------------------------------------------------------------

struct GenArgs {
  std::string kind = "geometric";
  std::size_t n = 50;
  double area = 1000.0;
  double range = 300.0;
  double w_lo = 0.0;
  double w_hi = 50.0;
  bool symmetric = false;
  double fail_prob = 0.1;
  std::size_t epochs = 8;
  double dwell = 1.0;
  double speed = 100.0;
};

int run_gen(const GenArgs& a, const Common& c) {
  Rng rng(c.seed.value_or(1));
  GeometricParams g;
  g.n = a.n;
  g.area_side = a.area;
  g.comm_range = a.range;
  g.weights = {a.w_lo, a.w_hi};
  g.symmetric_weights = a.symmetric;
  if (a.kind == "geometric") {
    emit(topology_to_json(gen_geometric(g, rng)), c.out);
  } else if (a.kind == "link_failure") {
    const Topology base = gen_geometric(g, rng);
    emit(sequence_to_json(gen_link_failures(base, a.fail_prob, a.epochs, a.dwell, rng)), c.out);
  } else {
    WaypointParams w;
    w.n = a.n;
    w.area_side = a.area;
    w.comm_range = a.range;
    w.ref_speed = a.speed;
    w.weights = g.weights;
    w.symmetric_weights = a.symmetric;
    emit(sequence_to_json(gen_waypoint(w, a.epochs, a.dwell, rng)), c.out);
  }
  return 0;
}

// --- select -----------------------------------------------------------------

struct SelectArgs {
  std::string topology;
  std::string policy = "supermodular";
  double beta = 1.0;
  bool naive = false;
  double tol = 1e-6;
};

int run_select(const SelectArgs& a, const Common& c) {
  const Topology topo = topology_from_json(read_json_file(a.topology));
  const double p = c.p.value_or(2.0);
  if (c.k.has_value() == c.alpha.has_value()) throw DomainError("select needs exactly one of --k and --alpha");
  Rng rng(c.seed.value_or(1));

  if (a.policy == "total_error") {
    if (!c.k) throw DomainError("total_error selection needs --k");
    emit(selection_to_json(select_k_total_error(topo, *c.k, p, a.tol)), c.out);
    return 0;
  }

  double horizon = 0.0;
  if (c.t) {
    horizon = *c.t;
  } else {
    std::vector<NodeId> all(topo.size());
    for (NodeId v = 0; v < topo.size(); ++v) all[v] = v;
    std::shuffle(all.begin(), all.end(), rng);
    horizon = horizon_for_bound(topo, LeaderSet{all.front()}, p, a.beta);
  }
  std::cerr << "horizon t = " << format_double(horizon) << '\n';
  const ErrorEvaluator eval(topo, horizon, p);
  const auto engine = a.naive ? GreedyEngine::naive : GreedyEngine::lazy;

  SelectionResult result;
  if (a.policy == "supermodular") {
    result = c.k ? select_k_leaders(eval, *c.k, engine) : select_minimal_leaders(eval, *c.alpha, engine);
  } else {
    const Baseline b = parse_baseline(a.policy);
    if (c.k) {
      result = select_baseline(topo, *c.k, b, rng, &eval);
    } else {
      result = fill_until(eval, baseline_order(topo, b, rng), *c.alpha);
    }
  }
  emit(selection_to_json(result), c.out);
  return 0;
}

// --- run / summarize ----------------------------------------------------------

struct RunArgs {
  std::string config;
  std::string scale = "desk";
  bool no_resume = false;
  bool print_config = false;
  bool quiet = false;
};

int run_run(const RunArgs& a, const Common& c) {
  Json raw = a.config.empty() ? Json::object() : read_json_file(a.config);
  raw = apply_scale(std::move(raw), a.scale);
  if (raw.is_object()) {
    if (c.seed) raw["seed"] = *c.seed;
    if (!c.out.empty()) raw["output"] = c.out;
    if (c.p) raw["p"] = *c.p;
    if (c.t) {
      raw["horizon_rule"] = "fixed";
      raw["horizon_t"] = *c.t;
    }
    if (c.k) {
      raw["k"] = *c.k;
      raw["k_values"] = Json::array({*c.k});
    }
    if (c.alpha) raw["alpha_values"] = Json::array({*c.alpha});
    if (!c.policies.empty()) raw["policies"] = c.policies;
  }
  const ExperimentConfig config = validate_config(raw);
  if (a.print_config) {
    std::cout << config_to_json(config).dump(2) << '\n';
    return 0;
  }
  RunOptions options;
  options.threads = threads_from_env();
  options.resume = !a.no_resume;
  if (!a.quiet) {
    options.progress = [](std::size_t done, std::size_t total) {
      std::cerr << "\rtrial " << done << "/" << total << std::flush;
      if (done == total) std::cerr << '\n';
    };
  }
  const auto rows = run_experiment(config, options);
  if (!a.quiet) std::cerr << rows.size() << " rows -> " << config.output << '\n';
  return 0;
}

int run_summarize(const std::string& input, const Common& c) {
  const auto rows = summarize(std::filesystem::path(input));
  if (!c.out.empty()) {
    write_summary(c.out, rows);
    return 0;
  }
  std::cout << "policy,sweep,count,bound_mean,bound_stderr,num_leaders_mean,num_leaders_stderr,"
               "realized_mean,realized_stderr\n";
  for (const auto& s : rows) {
    std::cout << s.policy << ',' << s.sweep << ',' << s.count << ',' << format_double(s.bound_mean) << ','
              << format_double(s.bound_stderr) << ',' << format_double(s.leaders_mean) << ','
              << format_double(s.leaders_stderr) << ',' << format_double(s.realized_mean) << ','
              << format_double(s.realized_stderr) << '\n';
  }
  return 0;
}

// --- oracle -------------------------------------------------------------------

struct OracleArgs {
  std::string check = "supermodular";
  std::string topology;
  std::string leaders;
  std::size_t tau = 64;
};

int run_oracle(const OracleArgs& a, const Common& c) {
  const Topology topo = topology_from_json(read_json_file(a.topology));
  const double p = c.p.value_or(2.0);
  const double t = c.t.value_or(1.0);
  if (a.check == "supermodular") {
    const ErrorEvaluator eval(topo, t, p);
    const auto report = check_supermodular([&](const LeaderSet& s) { return eval(s); }, topo.size(),
                                           kMaxExhaustiveGround);
    std::cout << "quadruples " << report.quadruples << ", violations " << report.violations.size()
              << ", worst slack " << format_double(report.worst_slack) << '\n';
    for (const auto& v : report.violations) {
      std::cout << "  S={" << format_leaders(v.s.nodes()) << "} T={" << format_leaders(v.t.nodes())
                << "} v=" << v.v + 1 << " lhs=" << format_double(v.lhs) << " rhs=" << format_double(v.rhs)
                << '\n';
    }
    return report.passed() ? 0 : 1;
  }
  // walk: random-walk powers against the exponential
  const LeaderSet s(parse_leaders(a.leaders));
  const WalkChain chain = WalkChain::from_topology(topo, s, t / static_cast<double>(a.tau));
  const Eigen::MatrixXd diff = hit_probabilities(chain, a.tau) - expm_neg(build_laplacian(topo, s), t);
  const double worst = diff.cwiseAbs().maxCoeff();
  std::cout << "tau " << a.tau << ", max |P_delta^tau - P_t| = " << format_double(worst) << '\n';
  return worst <= 1e-9 ? 0 : 1;
}

void add_common(CLI::App* cmd, Common& c, bool selection_flags) {
  cmd->add_option("--seed", c.seed, "master seed");
  cmd->add_option("--out", c.out, "output path (stdout when omitted)");
  cmd->add_option("--p", c.p, "norm order p >= 1");
  cmd->add_option("--t", c.t, "fixed horizon t");
  if (selection_flags) {
    cmd->add_option("--k", c.k, "number of leaders");
    cmd->add_option("--alpha", c.alpha, "error budget");
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Leader selection for leader-follower consensus networks"};
  app.require_subcommand(1);
  Common common;

  GenArgs gen;
  auto* gen_cmd = app.add_subcommand("gen", "emit a topology or epoch sequence as JSON");
  gen_cmd->add_option("kind", gen.kind, "geometric | link_failure | waypoint")
      ->check(CLI::IsMember({"geometric", "link_failure", "waypoint"}));
  gen_cmd->add_option("--n", gen.n, "node count");
  gen_cmd->add_option("--area", gen.area, "side of the square area");
  gen_cmd->add_option("--range", gen.range, "communication range");
  gen_cmd->add_option("--weight-lo", gen.w_lo);
  gen_cmd->add_option("--weight-hi", gen.w_hi);
  gen_cmd->add_flag("--symmetric", gen.symmetric, "force W_ij = W_ji");
  gen_cmd->add_option("--fail-prob", gen.fail_prob);
  gen_cmd->add_option("--epochs", gen.epochs);
  gen_cmd->add_option("--dwell", gen.dwell);
  gen_cmd->add_option("--speed", gen.speed, "reference speed (waypoint)");
  add_common(gen_cmd, common, false);

  SelectArgs sel;
  auto* sel_cmd = app.add_subcommand("select", "select leaders on one topology, print JSON");
  sel_cmd->add_option("--topology", sel.topology, "topology JSON")->required();
  sel_cmd->add_option("--policy", sel.policy, "supermodular | random | max_degree | average_degree | total_error")
      ->check(CLI::IsMember({"supermodular", "random", "max_degree", "average_degree", "total_error"}));
  sel_cmd->add_option("--beta", sel.beta, "bound target for the horizon rule when --t is absent");
  sel_cmd->add_flag("--naive", sel.naive, "full rescan greedy instead of lazy");
  sel_cmd->add_option("--tol", sel.tol, "quadrature tolerance for total_error");
  add_common(sel_cmd, common, true);

  RunArgs run;
  auto* run_cmd = app.add_subcommand("run", "run an experiment sweep from a config");
  run_cmd->add_option("--config", run.config, "experiment config JSON");
  run_cmd->add_option("--scale", run.scale, "desk | paper")->check(CLI::IsMember({"desk", "paper"}));
  run_cmd->add_option("--policy", common.policies, "restrict to these policies");
  run_cmd->add_flag("--no-resume", run.no_resume, "start over even if the output exists");
  run_cmd->add_flag("--print-config", run.print_config, "print the validated config and exit");
  run_cmd->add_flag("--quiet", run.quiet);
  add_common(run_cmd, common, true);

  std::string summary_input;
  auto* sum_cmd = app.add_subcommand("summarize", "per (sweep, policy) means and standard errors");
  sum_cmd->add_option("results", summary_input, "results CSV")->required();
  sum_cmd->add_option("--out", common.out, "summary CSV (stdout when omitted)");

  OracleArgs oracle;
  auto* or_cmd = app.add_subcommand("oracle", "brute-force checks on a small topology");
  or_cmd->add_option("check", oracle.check, "supermodular | walk")->check(CLI::IsMember({"supermodular", "walk"}));
  or_cmd->add_option("--topology", oracle.topology)->required();
  or_cmd->add_option("--leaders", oracle.leaders, "1-based, ';'-separated (walk)");
  or_cmd->add_option("--tau", oracle.tau, "walk steps (walk)");
  add_common(or_cmd, common, false);

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen_cmd->parsed()) return run_gen(gen, common);
    if (sel_cmd->parsed()) return run_select(sel, common);
    if (run_cmd->parsed()) return run_run(run, common);
    if (sum_cmd->parsed()) return run_summarize(summary_input, common);
    if (or_cmd->parsed()) return run_oracle(oracle, common);
  } catch (const ValidationError& e) {
    std::cerr << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
