#pragma once

#include "leadsel/graph.hpp"
#include "leadsel/io.hpp"
#include "leadsel/online_selection.hpp"

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace leadsel {

enum class ExperimentKind { static_k, static_alpha, link_failure, waypoint, regret_lower_bound };
enum class HorizonRule { beta, fixed };

std::string_view to_string(ExperimentKind k);
std::string_view to_string(HorizonRule r);

struct ExperimentConfig {
  ExperimentKind kind = ExperimentKind::static_k;

  // topology
  std::size_t n = 100;
  double area_side = 1000.0;
  double comm_range = 300.0;
  Interval weights{0.0, 50.0};
  bool symmetric_weights = false;

  // bound and horizon
  double p = 2.0;
  HorizonRule horizon_rule = HorizonRule::beta;
  double horizon_beta = 1.0;
  double horizon_t = 1.0;
  std::size_t horizon_set_size = 1;

  // sweeps
  std::vector<std::size_t> k_values{1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12, 13, 14, 15};
  std::vector<double> alpha_values{0.5, 1.0, 2.0};
  std::size_t k = 5;
  std::vector<double> fail_probs{0.0, 0.05, 0.1, 0.15};
  std::size_t epochs = 8;
  double ref_speed = 100.0;
  Interval disturbance{0.0, 50.0};

  // online selection
  double experts_beta = 0.8;
  ExponentMode exponent_mode = ExponentMode::normalized_loss;
  std::optional<double> eta;
  std::size_t mc_samples = 20;

  // lower-bound construction
  std::size_t regret_r = 2000;
  double sigma = 0.0;

  std::size_t initial_states = 10;
  std::vector<std::string> policies;  // empty: every policy valid for the kind
  std::size_t trials = 50;
  std::uint64_t seed = 1;
  std::string output = "results.csv";
};

/// Policies a kind accepts, in default order.
std::vector<std::string> valid_policies(ExperimentKind kind);
/// config.policies, or valid_policies(kind) when empty.
std::vector<std::string> active_policies(const ExperimentConfig& config);

/// Parses and checks a configuration document; missing keys take the defaults
/// above. Throws ValidationError listing every unknown key, type mismatch and
/// out-of-range value.
ExperimentConfig validate_config(const Json& raw);
/// Canonical form: every key, in declaration order.
Json config_to_json(const ExperimentConfig& config);

/// Desk scale fills n = 50 and trials = 20 where `raw` leaves them unset;
/// paper scale leaves the defaults (n = 100, 50 trials).
Json apply_scale(Json raw, std::string_view scale);

/// seed_i = splitmix64(splitmix64(master) xor i).
std::uint64_t trial_seed(std::uint64_t master, std::size_t trial);
std::uint64_t splitmix64(std::uint64_t x);

// ---------------------------------------------------------------------------

struct ResultRow {
  std::size_t trial = 0;
  std::uint64_t seed = 0;
  std::string policy;
  double sweep = 0.0;
  std::size_t num_leaders = 0;
  std::string leaders;
  double bound = 0.0;
  double realized_error = 0.0;
  std::size_t evaluations = 0;
  double wall_time_s = 0.0;
};

const std::vector<std::string>& result_header();
std::vector<std::string> format_row(const ResultRow& row);

/// Rows one trial contributes.
std::size_t rows_per_trial(const ExperimentConfig& config);

std::vector<ResultRow> run_trial(const ExperimentConfig& config, std::size_t trial);

struct RunOptions {
  std::size_t threads = 1;
  bool resume = true;
  std::function<void(std::size_t done, std::size_t total)> progress;
};

/// Runs every trial and returns rows in (trial, sweep, policy) order. With a
/// nonempty config.output, rows are appended to the CSV as soon as all
/// earlier trials are written; an existing file with the same header is
/// resumed after its last complete trial.
std::vector<ResultRow> run_experiment(const ExperimentConfig& config, const RunOptions& options = {});

/// LEADSEL_THREADS, else hardware concurrency (at least 1).
std::size_t threads_from_env();

// ---------------------------------------------------------------------------

struct SummaryRow {
  std::string policy;
  std::string sweep;
  std::size_t count = 0;
  double bound_mean = 0.0;
  double bound_stderr = 0.0;
  double leaders_mean = 0.0;
  double leaders_stderr = 0.0;
  double realized_mean = 0.0;
  double realized_stderr = 0.0;
};

/// Groups by (sweep, policy) in order of first appearance. Standard error is
/// the sample standard deviation over sqrt(count); 0 for a single row.
/// Throws SchemaError naming every missing column.
std::vector<SummaryRow> summarize(const CsvTable& table);
std::vector<SummaryRow> summarize(const std::filesystem::path& results);
void write_summary(const std::filesystem::path& path, const std::vector<SummaryRow>& rows);

}  // namespace leadsel
