#pragma once

#include "leadsel/graph.hpp"

#include <Eigen/Dense>

#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <span>
#include <unordered_map>
#include <vector>

namespace leadsel {

/// A real-valued function of a leader set over the ground set {0..n-1}.
/// Implementations must be deterministic and safe to call concurrently.
class SetObjective {
 public:
  virtual ~SetObjective() = default;
  virtual std::size_t ground_size() const = 0;
  virtual double operator()(const LeaderSet& s) const = 0;
};

/// Thread-safe memo keyed by leader set. Concurrent inserts of the same key
/// are idempotent: the first stored value wins.
template <class Value>
class LeaderSetMemo {
 public:
  std::optional<Value> find(const LeaderSet& s) const {
    std::shared_lock lock(mu_);
    auto it = map_.find(s);
    if (it == map_.end()) return std::nullopt;
    return it->second;
  }
  Value insert(const LeaderSet& s, Value v) {
    std::unique_lock lock(mu_);
    return map_.try_emplace(s, std::move(v)).first->second;
  }
  std::size_t size() const {
    std::shared_lock lock(mu_);
    return map_.size();
  }

 private:
  mutable std::shared_mutex mu_;
  std::unordered_map<LeaderSet, Value, LeaderSetHash> map_;
};

struct StateVector {
  Eigen::VectorXd values;
  double time = 0.0;
};

/// Sum over follower rows of  sum_j E_ij^p + (sum_j E_ij)^p  where E is the
/// follower block of P_t. The row sum equals 1 - sum_{j in S} (P_t)_ij.
double bound_from_follower_block(const Eigen::MatrixXd& block, double p);

/// Follower block of e^{-L t} for the S-absorbing Laplacian, rows/columns in
/// the order of S's complement.
Eigen::MatrixXd follower_transition(const Topology& topo, const LeaderSet& leaders, double t);

/// Initial-state-free bound on the convergence error (its p-th power).
/// S = {} is legal: every node is then a follower with escape probability 1.
double error_bound(const Topology& topo, const LeaderSet& leaders, double t, double p);

/// Memoizing bound evaluator for one topology, horizon and norm order.
class ErrorEvaluator final : public SetObjective {
 public:
  /// Throws DomainError unless horizon > 0 and p >= 1.
  ErrorEvaluator(Topology topo, double horizon, double p);

  std::size_t ground_size() const override { return topo_.size(); }
  double operator()(const LeaderSet& s) const override;

  /// K * bound^(1/p): bound on f_t(S) for any ||x(0)||_q <= K.
  double scaled_bound(const LeaderSet& s, double norm_budget) const;
  /// Full row-stochastic P_t for the S-absorbing Laplacian (memoized).
  Eigen::MatrixXd transition(const LeaderSet& s) const;
  /// Largest singleton bound (memoized).
  double f_max() const;

  const Topology& topology() const noexcept { return topo_; }
  double horizon() const noexcept { return horizon_; }
  double p() const noexcept { return p_; }
  std::size_t cached() const { return memo_->bounds.size(); }

 private:
  struct Memo {
    LeaderSetMemo<double> bounds;
    LeaderSetMemo<Eigen::MatrixXd> transitions;
    std::once_flag f_max_once;
    double f_max = 0.0;
  };
  Topology topo_;
  double horizon_;
  double p_;
  std::unique_ptr<Memo> memo_;
};

/// Bound for a fixed realization of switching topologies with one leader set
/// held throughout; the transition is the time-ordered product of epoch
/// exponentials (latest epoch applied last).
class SequenceEvaluator final : public SetObjective {
 public:
  SequenceEvaluator(EpochSequence seq, double p);

  std::size_t ground_size() const override { return seq_.nodes(); }
  double operator()(const LeaderSet& s) const override;
  Eigen::MatrixXd transition(const LeaderSet& s) const;
  const EpochSequence& sequence() const noexcept { return seq_; }

 private:
  EpochSequence seq_;
  double p_;
  std::unique_ptr<LeaderSetMemo<double>> memo_;
};

/// Unweighted mean of several objectives over the same ground set.
class AverageObjective final : public SetObjective {
 public:
  explicit AverageObjective(std::vector<std::shared_ptr<const SetObjective>> parts);
  std::size_t ground_size() const override { return n_; }
  double operator()(const LeaderSet& s) const override;
  const std::vector<std::shared_ptr<const SetObjective>>& parts() const noexcept { return parts_; }

 private:
  std::vector<std::shared_ptr<const SetObjective>> parts_;
  std::size_t n_;
};

// ---------------------------------------------------------------------------
// State propagation and realized error

/// x(t) = e^{-Lt} x(0). Throws DomainError if leader entries of x0 differ
/// from their anchors.
StateVector propagate(const Topology& topo, const LeaderConfig& config, const StateVector& x0,
                      double t);

/// Propagates through every epoch of `seq` in order.
StateVector propagate(const EpochSequence& seq, const LeaderConfig& config, const StateVector& x0);

/// l^p distance of the state to the hull of the anchors.
double containment_error(const LeaderConfig& config, const Eigen::VectorXd& x, double p);

/// f_t(S) for a concrete initial state.
double convergence_error(const Topology& topo, const LeaderConfig& config, const StateVector& x0,
                         double t, double p);

/// Conjugate exponent q with 1/p + 1/q = 1 (infinity for p = 1).
double conjugate_exponent(double p);

// ---------------------------------------------------------------------------
// Time-integrated error

struct TotalError {
  double value = 0.0;
  double truncation = 0.0;  // T*: quadrature covers [0, T*]
  double tail = 0.0;        // exponential-tail estimate beyond T*
};

/// Integral of the bound over [0, inf). Throws DivergenceError when S is
/// empty or some follower cannot reach a leader.
TotalError total_error(const Topology& topo, const LeaderSet& leaders, double p, double tol);

/// Smallest t found by doubling then bisection with error_bound(S, t) <= beta.
/// Throws DomainError if beta is met already at t = 0, DivergenceError if
/// never met.
double horizon_for_bound(const Topology& topo, const LeaderSet& leaders, double p, double beta);

// ---------------------------------------------------------------------------
// Dynamic topologies

/// Bound for one realization (samples not needed).
double dynamic_error_bound(const EpochSequence& seq, const LeaderSet& leaders, double p);

using SequenceSampler = std::function<EpochSequence(Rng&)>;

struct Estimate {
  double mean = 0.0;
  double std_error = 0.0;
  std::size_t samples = 0;
};

/// Monte Carlo mean of the bound over `samples` realizations drawn from `sampler`.
Estimate dynamic_error_bound(const SequenceSampler& sampler, const LeaderSet& leaders, double p,
                             std::size_t samples, Rng& rng);

struct PerEpochMetric {
  double average = 0.0;
  std::vector<double> terms;  // one single-epoch bound per epoch
};

/// Average over epochs of the single-epoch bound with that epoch's leader
/// set and dwell. Throws DomainError if sets.size() != seq.size().
PerEpochMetric per_epoch_metric(const EpochSequence& seq, std::span<const LeaderSet> sets, double p);

}  // namespace leadsel
