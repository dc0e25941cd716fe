#pragma once

// Slow, independent reference computations for the tests. Nothing here calls
// into the library's numerics; only its plain data types are shared.

#include "leadsel/graph.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <deque>
#include <functional>
#include <vector>

namespace oracle {

using leadsel::LeaderSet;
using leadsel::NodeId;
using leadsel::Topology;
using MatrixLd = Eigen::Matrix<long double, Eigen::Dynamic, Eigen::Dynamic>;

/// Laplacian assembled straight from the edge list.
inline Eigen::MatrixXd laplacian(const Topology& topo, const LeaderSet& leaders) {
  const auto n = static_cast<Eigen::Index>(topo.size());
  Eigen::MatrixXd l = Eigen::MatrixXd::Zero(n, n);
  for (const auto& e : topo.edges()) {
    if (leaders.contains(e.from)) continue;
    const auto i = static_cast<Eigen::Index>(e.from);
    const auto j = static_cast<Eigen::Index>(e.to);
    l(i, j) -= e.weight;
    l(i, i) += e.weight;
  }
  return l;
}

/// e^{-Lt} by a 40-term Taylor series in long double after scaling the
/// argument below 1/4 in 1-norm, then repeated squaring.
inline Eigen::MatrixXd series_expm_neg(const Eigen::MatrixXd& l, double t) {
  const auto n = l.rows();
  MatrixLd a = (-l * t).cast<long double>();
  long double norm = 0;
  for (Eigen::Index j = 0; j < n; ++j) norm = std::max(norm, a.col(j).cwiseAbs().sum());
  int s = 0;
  while (norm > 0.25L) {
    norm /= 2;
    ++s;
  }
  a /= std::ldexp(1.0L, s);
  MatrixLd sum = MatrixLd::Identity(n, n);
  MatrixLd term = MatrixLd::Identity(n, n);
  for (int k = 1; k <= 40; ++k) {
    term = (term * a) / static_cast<long double>(k);
    sum += term;
  }
  for (int i = 0; i < s; ++i) sum = sum * sum;
  return sum.cast<double>();
}

/// Bound evaluated on the full transition matrix:
/// sum over i outside S of [sum_{j outside S} P_ij^p + (1 - sum_{j in S} P_ij)^p].
inline double bound_from_full(const Eigen::MatrixXd& pt, const LeaderSet& leaders, double p) {
  double total = 0.0;
  for (Eigen::Index i = 0; i < pt.rows(); ++i) {
    if (leaders.contains(static_cast<NodeId>(i))) continue;
    double absorbed = 0.0;
    double inner = 0.0;
    for (Eigen::Index j = 0; j < pt.cols(); ++j) {
      const double v = std::max(pt(i, j), 0.0);
      if (leaders.contains(static_cast<NodeId>(j))) {
        absorbed += v;
      } else {
        inner += std::pow(v, p);
      }
    }
    total += inner + std::pow(std::max(1.0 - absorbed, 0.0), p);
  }
  return total;
}

inline double bound(const Topology& topo, const LeaderSet& leaders, double t, double p) {
  return bound_from_full(series_expm_neg(laplacian(topo, leaders), t), leaders, p);
}

/// Strong connectivity by a breadth-first search from every node.
inline bool strongly_connected(const Topology& topo) {
  const std::size_t n = topo.size();
  if (n == 0) return false;
  std::vector<std::vector<NodeId>> adj(n);
  for (const auto& e : topo.edges()) adj[e.from].push_back(e.to);
  for (NodeId s = 0; s < n; ++s) {
    std::vector<bool> seen(n, false);
    std::deque<NodeId> queue{s};
    seen[s] = true;
    std::size_t count = 1;
    while (!queue.empty()) {
      const NodeId u = queue.front();
      queue.pop_front();
      for (NodeId v : adj[u]) {
        if (!seen[v]) {
          seen[v] = true;
          ++count;
          queue.push_back(v);
        }
      }
    }
    if (count != n) return false;
  }
  return true;
}

/// (sum_i min_y |x_i - y|^p)^(1/p) with y scanned over a uniform grid on
/// [lo, hi] of the given step.
inline double grid_distance(const Eigen::VectorXd& x, double lo, double hi, double p, double step) {
  const auto points = static_cast<std::size_t>(std::ceil((hi - lo) / step)) + 1;
  double total = 0.0;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    double best = std::abs(x[i] - lo);
    for (std::size_t g = 1; g < points; ++g) {
      const double y = std::min(hi, lo + static_cast<double>(g) * step);
      best = std::min(best, std::abs(x[i] - y));
    }
    total += std::pow(best, p);
  }
  return std::pow(total, 1.0 / p);
}

/// Composite trapezoid rule on [0, T] with `intervals` panels.
inline double trapezoid(const std::function<double(double)>& g, double T, std::size_t intervals) {
  const double h = T / static_cast<double>(intervals);
  double sum = 0.5 * (g(0.0) + g(T));
  for (std::size_t k = 1; k < intervals; ++k) sum += g(h * static_cast<double>(k));
  return sum * h;
}

}  // namespace oracle
