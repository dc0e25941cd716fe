#include "leadsel/walk_oracle.hpp"

#include "leadsel/errors.hpp"
#include "leadsel/expm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <thread>

namespace leadsel {

namespace {

// Distribution after `steps` steps from the point mass at `start`.
Eigen::RowVectorXd push(const Eigen::MatrixXd& p, std::size_t steps, NodeId start) {
  Eigen::RowVectorXd v = Eigen::RowVectorXd::Zero(p.rows());
  v[static_cast<Eigen::Index>(start)] = 1.0;
  Eigen::RowVectorXd next(p.rows());
  for (std::size_t s = 0; s < steps; ++s) {
    next.noalias() = v * p;
    v.swap(next);
  }
  return v;
}

double escape_from_row(const Eigen::RowVectorXd& row, const LeaderSet& absorbing) {
  double absorbed = 0.0;
  for (NodeId j : absorbing) absorbed += row[static_cast<Eigen::Index>(j)];
  return std::clamp(1.0 - absorbed, 0.0, 1.0);
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

}  // namespace

WalkChain::WalkChain(Eigen::MatrixXd p, double delta, LeaderSet s)
    : transition(std::move(p)), step(delta), absorbing(std::move(s)) {
  const Eigen::Index n = transition.rows();
  if (transition.cols() != n) throw DomainError("transition matrix must be square");
  absorbing.check_range(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) {
    if (std::abs(transition.row(i).sum() - 1.0) > 1e-9 || transition.row(i).minCoeff() < 0.0) {
      throw DomainError("row " + std::to_string(i) + " is not a probability distribution");
    }
  }
  for (NodeId j : absorbing) {
    const auto jj = static_cast<Eigen::Index>(j);
    if (transition(jj, jj) != 1.0) throw DomainError("absorbing state " + std::to_string(j) + " can be left");
  }
}

WalkChain WalkChain::from_topology(const Topology& topo, const LeaderSet& absorbing, double delta) {
  return WalkChain(expm_neg(build_laplacian(topo, absorbing), delta), delta, absorbing);
}

Eigen::MatrixXd hit_probabilities(const WalkChain& chain, std::size_t steps) {
  const auto n = static_cast<Eigen::Index>(chain.size());
  Eigen::MatrixXd out(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    out.row(i) = push(chain.transition, steps, static_cast<NodeId>(i));
  }
  return out;
}

double escape_probability(const WalkChain& chain, std::size_t steps, NodeId start) {
  if (start >= chain.size()) throw DomainError("start node out of range");
  if (chain.absorbing.contains(start)) return 0.0;
  return escape_from_row(push(chain.transition, steps, start), chain.absorbing);
}

EscapeEstimate simulate_escape(const WalkChain& chain, std::size_t steps, NodeId start,
                               std::size_t trajectories, std::uint64_t seed, std::size_t shards) {
  if (start >= chain.size()) throw DomainError("start node out of range");
  if (trajectories == 0) throw DomainError("need at least one trajectory");
  shards = std::clamp<std::size_t>(shards, 1, trajectories);

  const auto n = static_cast<Eigen::Index>(chain.size());
  std::vector<std::vector<double>> cdf(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) {
    auto& c = cdf[static_cast<std::size_t>(i)];
    c.resize(static_cast<std::size_t>(n));
    double acc = 0.0;
    for (Eigen::Index j = 0; j < n; ++j) c[static_cast<std::size_t>(j)] = (acc += chain.transition(i, j));
    c.back() = std::numeric_limits<double>::infinity();
  }

  std::vector<std::size_t> escaped(shards, 0);
  auto run_shard = [&](std::size_t shard) {
    Rng rng(splitmix64(seed ^ splitmix64(shard)));
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    const std::size_t count = trajectories / shards + (shard < trajectories % shards ? 1 : 0);
    std::size_t hits = 0;
    for (std::size_t k = 0; k < count; ++k) {
      NodeId x = start;
      for (std::size_t s = 0; s < steps && !chain.absorbing.contains(x); ++s) {
        const auto& c = cdf[x];
        x = static_cast<NodeId>(std::upper_bound(c.begin(), c.end(), unif(rng)) - c.begin());
      }
      if (!chain.absorbing.contains(x)) ++hits;
    }
    escaped[shard] = hits;
  };
  if (shards == 1) {
    run_shard(0);
  } else {
    std::vector<std::jthread> workers;
    for (std::size_t s = 0; s < shards; ++s) workers.emplace_back(run_shard, s);
  }

  std::size_t total = 0;
  for (auto h : escaped) total += h;
  const double m = static_cast<double>(trajectories);
  const double mean = static_cast<double>(total) / m;
  return {mean, std::sqrt(mean * (1.0 - mean) / m), trajectories};
}

// ---------------------------------------------------------------------------

LeaderSet set_from_mask(std::uint64_t mask, std::size_t n) {
  std::vector<NodeId> nodes;
  for (NodeId v = 0; v < n; ++v) {
    if (mask >> v & 1U) nodes.push_back(v);
  }
  return LeaderSet(std::move(nodes));
}

SupermodularReport check_supermodular(const SetFunction& fn, std::size_t n, std::size_t max_n,
                                      double tol) {
  if (max_n > kMaxExhaustiveGround || n > max_n) {
    throw RefusalError("exhaustive supermodularity check refused for a ground set of " +
                       std::to_string(n) + " (limit " +
                       std::to_string(std::min(max_n, kMaxExhaustiveGround)) + ")");
  }
  const std::uint64_t full = (std::uint64_t{1} << n) - 1;
  std::vector<double> f(full + 1);
  for (std::uint64_t m = 0; m <= full; ++m) f[m] = fn(set_from_mask(m, n));

  SupermodularReport report;
  report.worst_slack = std::numeric_limits<double>::infinity();
  for (std::uint64_t t = 0; t <= full; ++t) {
    // Walk every submask s of t, including t itself and the empty set.
    for (std::uint64_t s = t;; s = (s - 1) & t) {
      for (NodeId v = 0; v < n; ++v) {
        const std::uint64_t bit = std::uint64_t{1} << v;
        if (t & bit) continue;
        const double lhs = f[s] - f[s | bit];
        const double rhs = f[t] - f[t | bit];
        ++report.quadruples;
        report.worst_slack = std::min(report.worst_slack, lhs - rhs);
        if (lhs < rhs - tol) {
          report.violations.push_back({set_from_mask(s, n), set_from_mask(t, n), v, lhs, rhs});
        }
      }
      if (s == 0) break;
    }
  }
  if (report.quadruples == 0) report.worst_slack = 0.0;
  return report;
}

}  // namespace leadsel
