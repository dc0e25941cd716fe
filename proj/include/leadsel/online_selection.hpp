#pragma once

#include "leadsel/dynamics.hpp"
#include "leadsel/graph.hpp"

#include <optional>
#include <span>
#include <string_view>
#include <vector>

namespace leadsel {

/// Exponential-weights experts over n actions: select, observe the full loss
/// vector, reweight w_j <- w_j exp(-eta l_j).
class RandomizedExperts {
 public:
  /// Throws DomainError unless n >= 1 and eta in [0, 1].
  RandomizedExperts(std::size_t n, double eta);

  /// min(1, sqrt(8 ln n / T)) for a known horizon T, otherwise 0.3.
  static double default_eta(std::size_t n, std::optional<std::size_t> horizon);

  std::size_t select(Rng& rng) const;
  void observe(std::span<const double> losses);
  /// select, then observe; returns the action chosen before the update.
  std::size_t step(std::span<const double> losses, Rng& rng);

  std::vector<double> probabilities() const;
  const std::vector<double>& weights() const noexcept { return w_; }
  double eta() const noexcept { return eta_; }
  std::size_t epoch() const noexcept { return epoch_; }
  std::size_t size() const noexcept { return w_.size(); }

 private:
  std::vector<double> w_;
  double eta_;
  std::size_t epoch_ = 0;
};

/// How the multiplicative update exponent is formed from the observed bounds.
enum class ExponentMode {
  normalized_loss,  // f(S^{j-1} + i) / f_max of the observed topology
  raw_loss,         // f(S^{j-1} + i)
  literal_gain,     // f(S^{j-1}) - f(S^{j-1} + i)
};

std::string_view to_string(ExponentMode m);
ExponentMode parse_exponent_mode(std::string_view name);

struct DynamicLeaderParams {
  std::size_t k = 1;
  double p = 2.0;
  double beta = 0.8;
  ExponentMode mode = ExponentMode::normalized_loss;
};

/// Weights w_ij (node i as j-th leader) and the previously chosen set.
class ExpertsState {
 public:
  /// Throws DomainError if k > n or beta outside (0, 1].
  ExpertsState(std::size_t n, DynamicLeaderParams params);

  std::size_t nodes() const noexcept { return n_; }
  const DynamicLeaderParams& params() const noexcept { return params_; }
  const Eigen::MatrixXd& weights() const noexcept { return w_; }
  std::size_t epoch() const noexcept { return epoch_; }
  /// Previous leader set in insertion order (empty before the first epoch).
  const std::vector<NodeId>& previous() const noexcept { return previous_; }

  /// Slot-j selection probabilities over nodes not in `taken`.
  Eigen::VectorXd probabilities(std::size_t slot, const LeaderSet& taken) const;

  /// Updates slot weights from the bounds the previous epoch's prefixes would
  /// have produced on `observed` with horizon `dwell`.
  void observe(const Topology& observed, double dwell);
  /// Draws S_r slot by slot from the current weights and records it.
  std::vector<NodeId> sample(Rng& rng);

 private:
  std::size_t n_;
  DynamicLeaderParams params_;
  Eigen::MatrixXd w_;
  std::vector<NodeId> previous_;
  std::size_t epoch_ = 0;
};

/// One epoch of online selection: learns from `observed` (the topology of the
/// previous epoch, absent at the first epoch), then samples k leaders.
/// Returns leaders in slot order.
std::vector<NodeId> select_dynamic_leaders(ExpertsState& state, const Topology* observed,
                                           double observed_dwell, Rng& rng);

// ---------------------------------------------------------------------------
// Regret accounting

struct RegretLedger {
  std::vector<double> per_epoch_losses;
  double average_loss = 0.0;
  LeaderSet best_fixed_set;
  double best_fixed_objective = 0.0;
  double regret = 0.0;
  bool best_is_exhaustive = true;  // false: greedy surrogate, regret may be understated
};

/// Chosen-set losses are single-epoch bounds; the comparator is the best fixed
/// set of size max |S_m| in hindsight (exhaustive when C(n, k) <= 1e5).
RegretLedger regret_of_run(const EpochSequence& seq, std::span<const LeaderSet> chosen, double p);

/// Rebuilds a ledger from stored losses and the hindsight optimum.
RegretLedger ledger_from_losses(std::vector<double> losses, LeaderSet best_set, double best_objective,
                                bool exhaustive);

/// Mean over epochs of single-epoch bounds with one fixed set.
class FixedSetAverage final : public SetObjective {
 public:
  FixedSetAverage(const EpochSequence& seq, double p);
  std::size_t ground_size() const override { return n_; }
  double operator()(const LeaderSet& s) const override;

 private:
  std::vector<ErrorEvaluator> parts_;
  std::size_t n_;
};

// ---------------------------------------------------------------------------
// Lower-bound construction: every epoch each node's singleton loss is sigma
// or 1 with probability 1/2.

enum class AdversaryPolicy { uniform_random, experts };

struct AdversarialParams {
  std::size_t n = 50;
  std::size_t r = 2000;
  std::size_t trials = 100;
  double sigma = 0.0;
  AdversaryPolicy policy = AdversaryPolicy::uniform_random;
  std::optional<double> eta;  // experts only; default_eta(n, r) when unset
};

struct AdversarialReport {
  std::vector<double> regrets;       // one per trial
  double mean_regret = 0.0;
  double regret_std_error = 0.0;
  double lower_bound = 0.0;          // (1/r) sqrt(r/2 ln n)
  double experts_upper_scale = 0.0;  // sqrt(r ln n / 2) / r
  double mean_min_a = 0.0;           // mean of min_i A_{r,i}
  double mean_b = 0.0;               // mean of (min_i A - r/2) / sqrt(r/2 ln n); 0 for n = 1
  std::vector<double> a_means;       // per node, over trials
  std::vector<double> a_std_errors;
};

AdversarialReport adversarial_lower_bound_experiment(const AdversarialParams& params, Rng& rng);

}  // namespace leadsel
