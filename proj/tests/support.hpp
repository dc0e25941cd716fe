#pragma once

#include "leadsel/graph.hpp"

#include <algorithm>
#include <numeric>
#include <random>
#include <vector>

namespace testing_support {

using leadsel::Edge;
using leadsel::LeaderSet;
using leadsel::NodeId;
using leadsel::Rng;
using leadsel::Topology;

/// Each directed edge present with probability `density`, weights uniform on [lo, hi].
inline Topology random_topology(std::size_t n, double density, Rng& rng, double lo = 0.1,
                                double hi = 5.0) {
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  std::uniform_real_distribution<double> weight(lo, hi);
  std::vector<Edge> edges;
  for (NodeId i = 0; i < n; ++i) {
    for (NodeId j = 0; j < n; ++j) {
      if (i != j && coin(rng) < density) edges.push_back({i, j, weight(rng)});
    }
  }
  return Topology(n, std::move(edges));
}

/// Like random_topology, redrawn until strongly connected.
inline Topology random_connected(std::size_t n, double density, Rng& rng, double lo = 0.1,
                                 double hi = 5.0) {
  for (;;) {
    Topology t = random_topology(n, density, rng, lo, hi);
    if (t.strongly_connected()) return t;
  }
}

/// Same graph with W_ji forced to W_ij for i < j (both directions present).
inline Topology symmetrized(const Topology& topo) {
  std::vector<Edge> edges;
  for (const auto& e : topo.edges()) {
    if (e.from < e.to) {
      edges.push_back({e.from, e.to, e.weight});
      edges.push_back({e.to, e.from, e.weight});
    } else if (!topo.has_edge(e.to, e.from)) {
      edges.push_back({e.from, e.to, e.weight});
      edges.push_back({e.to, e.from, e.weight});
    }
  }
  return Topology(topo.size(), std::move(edges));
}

/// Uniform subset of exactly `size` nodes.
inline LeaderSet random_subset(std::size_t n, std::size_t size, Rng& rng) {
  std::vector<NodeId> all(n);
  std::iota(all.begin(), all.end(), NodeId{0});
  std::shuffle(all.begin(), all.end(), rng);
  all.resize(size);
  return LeaderSet(std::move(all));
}

inline std::size_t uniform_size(std::size_t lo, std::size_t hi, Rng& rng) {
  return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
}

}  // namespace testing_support
