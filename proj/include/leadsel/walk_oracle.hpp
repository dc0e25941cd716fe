#pragma once

// Brute-force checks for the random-walk reading of the bound and for
// supermodularity. Test support only; nothing on a production path calls this.

#include "leadsel/graph.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <vector>

namespace leadsel {

/// Discrete walk with transition P_delta; leaders are absorbing states.
struct WalkChain {
  Eigen::MatrixXd transition;
  double step = 0.0;
  LeaderSet absorbing;

  /// Checks that rows sum to 1 (1e-9) and absorbing rows are basis rows.
  WalkChain(Eigen::MatrixXd transition, double step, LeaderSet absorbing);

  /// P_delta = e^{-L delta} for the S-absorbing Laplacian of `topo`.
  static WalkChain from_topology(const Topology& topo, const LeaderSet& absorbing, double delta);

  std::size_t size() const { return static_cast<std::size_t>(transition.rows()); }
};

/// Row i holds Pr(X(tau) = j | X(0) = i), computed by pushing the point mass
/// at i through tau steps.
Eigen::MatrixXd hit_probabilities(const WalkChain& chain, std::size_t steps);

/// Pr(X(tau) not in S | X(0) = start) = 1 - sum_{j in S} hit(start, j).
/// Zero when start is absorbing.
double escape_probability(const WalkChain& chain, std::size_t steps, NodeId start);

struct EscapeEstimate {
  double mean = 0.0;
  double std_error = 0.0;
  std::size_t trajectories = 0;
};

/// Escape frequency over sampled trajectories. Trajectories are split into
/// `shards` blocks, each with its own generator seeded from `seed`.
EscapeEstimate simulate_escape(const WalkChain& chain, std::size_t steps, NodeId start,
                               std::size_t trajectories, std::uint64_t seed,
                               std::size_t shards = 1);

// ---------------------------------------------------------------------------

using SetFunction = std::function<double(const LeaderSet&)>;

struct SupermodularViolation {
  LeaderSet s;
  LeaderSet t;
  NodeId v;
  double lhs;  // f(S) - f(S + v)
  double rhs;  // f(T) - f(T + v)
};

struct SupermodularReport {
  std::size_t quadruples = 0;
  std::vector<SupermodularViolation> violations;
  double worst_slack = 0.0;  // min over checks of lhs - rhs
  bool passed() const noexcept { return violations.empty(); }
};

/// Largest ground set check_supermodular accepts.
inline constexpr std::size_t kMaxExhaustiveGround = 10;

/// Exhaustive diminishing-returns check over all S subset T, v outside T.
/// Throws RefusalError when n > max_n or max_n > kMaxExhaustiveGround.
SupermodularReport check_supermodular(const SetFunction& fn, std::size_t n, std::size_t max_n,
                                      double tol = 1e-9);

/// Converts a bitmask over {0..n-1} into a leader set.
LeaderSet set_from_mask(std::uint64_t mask, std::size_t n);

}  // namespace leadsel
