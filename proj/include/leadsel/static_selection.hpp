#pragma once

#include "leadsel/dynamics.hpp"
#include "leadsel/graph.hpp"

#include <optional>
#include <string_view>
#include <vector>

namespace leadsel {

struct SelectionResult {
  std::vector<NodeId> leaders;      // insertion order
  std::vector<double> bound_trace;  // objective after each insertion
  double objective = 0.0;
  std::size_t evaluations = 0;      // objective calls, including f({})

  LeaderSet set() const { return LeaderSet(leaders); }
  friend bool operator==(const SelectionResult&, const SelectionResult&) = default;
};

enum class GreedyEngine {
  lazy,   // priority queue of stale marginal gains
  naive,  // full rescan every step
};

/// Greedy minimization of a supermodular objective with exactly k leaders.
/// Ties go to the lowest node index under both engines.
/// Throws DomainError unless 1 <= k <= n.
SelectionResult select_k_leaders(const SetObjective& f, std::size_t k,
                                 GreedyEngine engine = GreedyEngine::lazy);

/// Grows S greedily while f(S) > alpha. Returns {} when f({}) <= alpha.
SelectionResult select_minimal_leaders(const SetObjective& f, double alpha,
                                       GreedyEngine engine = GreedyEngine::lazy);

enum class Baseline { random, max_degree, average_degree };

std::string_view to_string(Baseline b);
/// Throws DomainError on an unknown name.
Baseline parse_baseline(std::string_view name);

/// Full node order a baseline fills leaders in: a uniform permutation, out-degree
/// descending, or distance of out-degree to the mean ascending (index breaks ties).
std::vector<NodeId> baseline_order(const Topology& topo, Baseline policy, Rng& rng);

/// First k nodes of baseline_order. With `objective`, the trace and objective
/// are filled in for comparison; otherwise they are left empty / zero.
SelectionResult select_baseline(const Topology& topo, std::size_t k, Baseline policy, Rng& rng,
                                const SetObjective* objective = nullptr);

/// Takes nodes in `order` until f(S) <= alpha.
SelectionResult fill_until(const SetObjective& f, std::span<const NodeId> order, double alpha);

/// Time-integrated error as a set objective; the empty set maps to +inf.
class TotalErrorObjective final : public SetObjective {
 public:
  /// Throws DomainError when `topo` is not strongly connected.
  TotalErrorObjective(Topology topo, double p, double tol);
  std::size_t ground_size() const override { return topo_.size(); }
  double operator()(const LeaderSet& s) const override;

 private:
  Topology topo_;
  double p_;
  double tol_;
  std::unique_ptr<LeaderSetMemo<double>> memo_;
};

/// Greedy on the integrated error.
SelectionResult select_k_total_error(const Topology& topo, std::size_t k, double p, double tol);

struct ExhaustiveResult {
  LeaderSet set;
  double value = 0.0;
};

/// Best set of exactly k nodes by enumeration (lexicographically first on ties).
ExhaustiveResult exhaustive_best_k(const SetObjective& f, std::size_t k);

/// Smallest set with f(S) <= alpha by enumeration in increasing size.
ExhaustiveResult exhaustive_minimal(const SetObjective& f, double alpha);

/// max over v of f({v}).
double max_singleton(const SetObjective& f);

}  // namespace leadsel
