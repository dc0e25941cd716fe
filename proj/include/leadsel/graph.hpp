#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <map>
#include <optional>
#include <random>
#include <span>
#include <vector>

namespace leadsel {

/// Zero-based node index. Files and the CLI use 1-based indices; conversion
/// happens only at the I/O boundary.
using NodeId = std::size_t;

using Rng = std::mt19937_64;

struct Edge {
  NodeId from;
  NodeId to;
  double weight;

  friend bool operator==(const Edge&, const Edge&) = default;
};

/// Directed weighted graph. Immutable once built; an edge of weight 0 is still
/// an edge (it appears in N(i)) but contributes nothing to the dynamics.
class Topology {
 public:
  Topology() = default;
  /// Throws DomainError on self-loops, duplicate edges, negative weights or
  /// endpoints outside [0, n).
  Topology(std::size_t n, std::vector<Edge> edges);

  std::size_t size() const noexcept { return n_; }
  std::size_t edge_count() const noexcept { return edges_.size(); }
  /// Edges sorted by (from, to).
  const std::vector<Edge>& edges() const noexcept { return edges_; }
  /// Outgoing edges of `i`, sorted by target.
  std::span<const Edge> out_edges(NodeId i) const;

  bool has_edge(NodeId from, NodeId to) const;
  /// Weight of (from, to), or 0 when the edge is absent.
  double weight(NodeId from, NodeId to) const;
  std::size_t out_degree(NodeId i) const { return out_edges(i).size(); }
  double out_weight(NodeId i) const;
  bool strongly_connected() const noexcept { return strongly_connected_; }
  double min_positive_weight() const;

  friend bool operator==(const Topology& a, const Topology& b) {
    return a.n_ == b.n_ && a.edges_ == b.edges_;
  }

 private:
  std::size_t n_ = 0;
  std::vector<Edge> edges_;
  std::vector<std::size_t> offsets_;  // CSR row starts, size n_ + 1
  bool strongly_connected_ = false;
};

/// Sorted set of distinct node indices.
class LeaderSet {
 public:
  LeaderSet() = default;
  LeaderSet(std::initializer_list<NodeId> nodes);
  explicit LeaderSet(std::vector<NodeId> nodes);

  static LeaderSet all(std::size_t n);

  bool contains(NodeId v) const;
  /// Returns a copy with `v` added (no-op when already present).
  LeaderSet with(NodeId v) const;
  void insert(NodeId v);

  std::size_t size() const noexcept { return nodes_.size(); }
  bool empty() const noexcept { return nodes_.empty(); }
  const std::vector<NodeId>& nodes() const noexcept { return nodes_; }
  auto begin() const noexcept { return nodes_.begin(); }
  auto end() const noexcept { return nodes_.end(); }

  /// Throws DomainError if any element is >= n.
  void check_range(std::size_t n) const;
  /// Complement in {0..n-1}, sorted.
  std::vector<NodeId> complement(std::size_t n) const;

  friend bool operator==(const LeaderSet&, const LeaderSet&) = default;
  friend auto operator<=>(const LeaderSet&, const LeaderSet&) = default;

 private:
  std::vector<NodeId> nodes_;
};

struct LeaderSetHash {
  std::size_t operator()(const LeaderSet& s) const noexcept;
};

/// Leader set plus the constant state each leader holds.
class LeaderConfig {
 public:
  /// Throws DomainError unless `anchors` is keyed exactly by `leaders`.
  LeaderConfig(LeaderSet leaders, std::map<NodeId, double> anchors);
  /// All leaders share one anchor value.
  static LeaderConfig uniform(LeaderSet leaders, double anchor);

  const LeaderSet& leaders() const noexcept { return leaders_; }
  const std::map<NodeId, double>& anchors() const noexcept { return anchors_; }
  double anchor(NodeId j) const { return anchors_.at(j); }
  /// Convex hull of anchor values as [lo, hi]. Throws DomainError for S = {}.
  std::pair<double, double> hull() const;

 private:
  LeaderSet leaders_;
  std::map<NodeId, double> anchors_;
};

struct Epoch {
  Topology topology;
  double dwell;
};

/// Piecewise-constant topology: epoch m is active for `dwell` time units.
class EpochSequence {
 public:
  /// Throws DomainError when empty, when node counts differ, or when a dwell
  /// is below `gamma` (or gamma <= 0).
  EpochSequence(std::vector<Epoch> epochs, double gamma, double start_time = 0.0);

  std::size_t size() const noexcept { return epochs_.size(); }
  std::size_t nodes() const noexcept { return epochs_.front().topology.size(); }
  const Epoch& operator[](std::size_t m) const { return epochs_[m]; }
  const std::vector<Epoch>& epochs() const noexcept { return epochs_; }
  double gamma() const noexcept { return gamma_; }
  double start_time() const noexcept { return start_time_; }
  double total_time() const;

 private:
  std::vector<Epoch> epochs_;
  double gamma_;
  double start_time_;
};

/// Leader-absorbing Laplacian: follower rows carry the weighted out-degree on
/// the diagonal and -W_ij off it; leader rows are zero.
Eigen::MatrixXd build_laplacian(const Topology& topo, const LeaderSet& leaders);

/// Laplacian restricted to the follower rows and columns, in the order of
/// `followers`. Diagonals still include weight toward leaders.
Eigen::MatrixXd follower_laplacian(const Topology& topo, std::span<const NodeId> followers);

bool is_strongly_connected(const Topology& topo);

/// Nodes from which at least one node of `targets` is reachable (targets included).
std::vector<bool> can_reach(const Topology& topo, const LeaderSet& targets);

// ---------------------------------------------------------------------------
// Generators

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
};

struct GeometricParams {
  std::size_t n = 100;
  double area_side = 1000.0;
  double comm_range = 300.0;
  Interval weights{0.0, 50.0};
  bool symmetric_weights = false;
  std::size_t max_attempts = 1000;
};

struct Point {
  double x = 0.0;
  double y = 0.0;
};

/// Unit-disk graph over fixed positions; every directed link gets its own draw
/// unless symmetric_weights.
Topology disk_graph(std::span<const Point> positions, double comm_range, Interval weights,
                    bool symmetric_weights, Rng& rng);

/// Uniform placement in the square, resampled until strongly connected.
/// Throws GenerationError after params.max_attempts placements.
Topology gen_geometric(const GeometricParams& params, Rng& rng);

/// Each undirected link of `base` fails (both directions) independently with
/// probability fail_prob, independently per epoch.
EpochSequence gen_link_failures(const Topology& base, double fail_prob, std::size_t epochs,
                                double dwell, Rng& rng);

/// Single link-failure realization of `base`.
Topology fail_links(const Topology& base, double fail_prob, Rng& rng);

struct WaypointParams {
  std::size_t n = 100;
  double area_side = 1000.0;
  double comm_range = 300.0;
  double ref_speed = 100.0;
  Interval disturbance{0.0, 50.0};
  Interval weights{0.0, 50.0};
  bool symmetric_weights = false;
};

/// Group mobility: nodes hold fixed offsets from a shared reference point
/// that random-walks (reflecting at the square's boundary), plus a per-epoch
/// disturbance of uniform magnitude and direction. Link weights are drawn once
/// per ordered pair so a link that reappears keeps its weight.
class WaypointModel {
 public:
  static WaypointModel draw(const WaypointParams& params, Rng& rng);

  const WaypointParams& params() const noexcept { return params_; }
  const std::vector<Point>& offsets() const noexcept { return offsets_; }

  Topology topology_at(Point reference, Rng& rng) const;
  /// Advance the reference by one step of length ref_speed * dwell.
  Point step(Point reference, double dwell, Rng& rng) const;
  EpochSequence simulate(Point start, std::size_t epochs, double dwell, Rng& rng) const;

 private:
  WaypointParams params_;
  std::vector<Point> offsets_;
  Eigen::MatrixXd pair_weights_;
};

/// Draws the model, a uniform starting reference, and simulates `epochs` epochs.
EpochSequence gen_waypoint(const WaypointParams& params, std::size_t epochs, double dwell,
                           Rng& rng);

}  // namespace leadsel
