#include "leadsel/graph.hpp"

#include "leadsel/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <queue>
#include <string>

namespace leadsel {

namespace {

double draw_weight(Interval w, Rng& rng) {
  if (w.hi <= w.lo) return w.lo;
  return std::uniform_real_distribution<double>(w.lo, w.hi)(rng);
}

// Breadth-first reachability along out-edges (forward) or in-edges (reverse).
std::vector<bool> reach(const Topology& topo, const std::vector<NodeId>& sources, bool reverse) {
  const std::size_t n = topo.size();
  std::vector<std::vector<NodeId>> radj;
  if (reverse) {
    radj.resize(n);
    for (const auto& e : topo.edges()) radj[e.to].push_back(e.from);
  }
  std::vector<bool> seen(n, false);
  std::queue<NodeId> frontier;
  for (NodeId s : sources) {
    if (!seen[s]) {
      seen[s] = true;
      frontier.push(s);
    }
  }
  while (!frontier.empty()) {
    const NodeId u = frontier.front();
    frontier.pop();
    auto visit = [&](NodeId v) {
      if (!seen[v]) {
        seen[v] = true;
        frontier.push(v);
      }
    };
    if (reverse) {
      for (NodeId v : radj[u]) visit(v);
    } else {
      for (const auto& e : topo.out_edges(u)) visit(e.to);
    }
  }
  return seen;
}

double reflect(double x, double side) {
  if (side <= 0.0) return 0.0;
  const double period = 2.0 * side;
  x = std::fmod(x, period);
  if (x < 0.0) x += period;
  return x > side ? period - x : x;
}

}  // namespace

// ---------------------------------------------------------------------------
// Topology

Topology::Topology(std::size_t n, std::vector<Edge> edges) : n_(n), edges_(std::move(edges)) {
  for (const auto& e : edges_) {
    if (e.from >= n_ || e.to >= n_) {
      throw DomainError("edge (" + std::to_string(e.from) + "," + std::to_string(e.to) +
                        ") references a node outside [0," + std::to_string(n_) + ")");
    }
    if (e.from == e.to) throw DomainError("self-loop at node " + std::to_string(e.from));
    if (!(e.weight >= 0.0) || !std::isfinite(e.weight)) {
      throw DomainError("edge weight must be finite and nonnegative");
    }
  }
  std::sort(edges_.begin(), edges_.end(), [](const Edge& a, const Edge& b) {
    return a.from != b.from ? a.from < b.from : a.to < b.to;
  });
  for (std::size_t k = 1; k < edges_.size(); ++k) {
    if (edges_[k].from == edges_[k - 1].from && edges_[k].to == edges_[k - 1].to) {
      throw DomainError("duplicate edge (" + std::to_string(edges_[k].from) + "," +
                        std::to_string(edges_[k].to) + ")");
    }
  }
  offsets_.assign(n_ + 1, 0);
  for (const auto& e : edges_) ++offsets_[e.from + 1];
  for (std::size_t i = 0; i < n_; ++i) offsets_[i + 1] += offsets_[i];
  strongly_connected_ = is_strongly_connected(*this);
}

std::span<const Edge> Topology::out_edges(NodeId i) const {
  if (i >= n_) throw DomainError("node index out of range");
  return {edges_.data() + offsets_[i], offsets_[i + 1] - offsets_[i]};
}

bool Topology::has_edge(NodeId from, NodeId to) const {
  auto out = out_edges(from);
  return std::binary_search(out.begin(), out.end(), Edge{from, to, 0.0},
                            [](const Edge& a, const Edge& b) { return a.to < b.to; });
}

double Topology::weight(NodeId from, NodeId to) const {
  auto out = out_edges(from);
  auto it = std::lower_bound(out.begin(), out.end(), to,
                             [](const Edge& e, NodeId v) { return e.to < v; });
  return (it != out.end() && it->to == to) ? it->weight : 0.0;
}

double Topology::out_weight(NodeId i) const {
  double s = 0.0;
  for (const auto& e : out_edges(i)) s += e.weight;
  return s;
}

double Topology::min_positive_weight() const {
  double m = 0.0;
  for (const auto& e : edges_) {
    if (e.weight > 0.0 && (m == 0.0 || e.weight < m)) m = e.weight;
  }
  return m;
}

// ---------------------------------------------------------------------------
// LeaderSet / LeaderConfig

LeaderSet::LeaderSet(std::initializer_list<NodeId> nodes) : LeaderSet(std::vector<NodeId>(nodes)) {}

LeaderSet::LeaderSet(std::vector<NodeId> nodes) : nodes_(std::move(nodes)) {
  std::sort(nodes_.begin(), nodes_.end());
  if (std::adjacent_find(nodes_.begin(), nodes_.end()) != nodes_.end()) {
    throw DomainError("leader set contains duplicates");
  }
}

LeaderSet LeaderSet::all(std::size_t n) {
  std::vector<NodeId> v(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = i;
  return LeaderSet(std::move(v));
}

bool LeaderSet::contains(NodeId v) const {
  return std::binary_search(nodes_.begin(), nodes_.end(), v);
}

LeaderSet LeaderSet::with(NodeId v) const {
  LeaderSet out = *this;
  out.insert(v);
  return out;
}

void LeaderSet::insert(NodeId v) {
  auto it = std::lower_bound(nodes_.begin(), nodes_.end(), v);
  if (it == nodes_.end() || *it != v) nodes_.insert(it, v);
}

void LeaderSet::check_range(std::size_t n) const {
  if (!nodes_.empty() && nodes_.back() >= n) {
    throw DomainError("leader index " + std::to_string(nodes_.back()) + " out of range for " +
                      std::to_string(n) + " nodes");
  }
}

std::vector<NodeId> LeaderSet::complement(std::size_t n) const {
  std::vector<NodeId> out;
  out.reserve(n - std::min(n, nodes_.size()));
  auto it = nodes_.begin();
  for (NodeId v = 0; v < n; ++v) {
    if (it != nodes_.end() && *it == v) {
      ++it;
    } else {
      out.push_back(v);
    }
  }
  return out;
}

std::size_t LeaderSetHash::operator()(const LeaderSet& s) const noexcept {
  std::uint64_t h = 0x9e3779b97f4a7c15ULL ^ s.size();
  for (NodeId v : s) {
    h ^= v + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
  }
  return static_cast<std::size_t>(h);
}

LeaderConfig::LeaderConfig(LeaderSet leaders, std::map<NodeId, double> anchors)
    : leaders_(std::move(leaders)), anchors_(std::move(anchors)) {
  if (anchors_.size() != leaders_.size()) {
    throw DomainError("anchor states must be keyed exactly by the leader set");
  }
  for (const auto& [node, value] : anchors_) {
    if (!leaders_.contains(node)) {
      throw DomainError("anchor given for non-leader node " + std::to_string(node));
    }
    if (!std::isfinite(value)) throw DomainError("anchor states must be finite");
  }
}

LeaderConfig LeaderConfig::uniform(LeaderSet leaders, double anchor) {
  std::map<NodeId, double> a;
  for (NodeId j : leaders) a.emplace(j, anchor);
  return LeaderConfig(std::move(leaders), std::move(a));
}

std::pair<double, double> LeaderConfig::hull() const {
  if (anchors_.empty()) throw DomainError("hull of an empty leader set is undefined");
  auto [lo, hi] = std::minmax_element(anchors_.begin(), anchors_.end(),
                                      [](const auto& a, const auto& b) { return a.second < b.second; });
  return {lo->second, hi->second};
}

// ---------------------------------------------------------------------------
// EpochSequence

EpochSequence::EpochSequence(std::vector<Epoch> epochs, double gamma, double start_time)
    : epochs_(std::move(epochs)), gamma_(gamma), start_time_(start_time) {
  if (epochs_.empty()) throw DomainError("epoch sequence must contain at least one epoch");
  if (!(gamma_ > 0.0)) throw DomainError("minimum dwell gamma must be positive");
  const std::size_t n = epochs_.front().topology.size();
  for (const auto& e : epochs_) {
    if (e.topology.size() != n) throw DomainError("all epochs must share the node set");
    if (e.dwell < gamma_) throw DomainError("epoch dwell below the declared minimum gamma");
  }
}

double EpochSequence::total_time() const {
  double t = 0.0;
  for (const auto& e : epochs_) t += e.dwell;
  return t;
}

// ---------------------------------------------------------------------------
// Laplacians and connectivity

Eigen::MatrixXd build_laplacian(const Topology& topo, const LeaderSet& leaders) {
  const std::size_t n = topo.size();
  leaders.check_range(n);
  Eigen::MatrixXd lap = Eigen::MatrixXd::Zero(n, n);
  for (NodeId i = 0; i < n; ++i) {
    if (leaders.contains(i)) continue;
    double diag = 0.0;
    for (const auto& e : topo.out_edges(i)) {
      lap(i, e.to) = -e.weight;
      diag += e.weight;
    }
    lap(i, i) = diag;
  }
  return lap;
}

Eigen::MatrixXd follower_laplacian(const Topology& topo, std::span<const NodeId> followers) {
  const std::size_t m = followers.size();
  std::vector<std::ptrdiff_t> pos(topo.size(), -1);
  for (std::size_t a = 0; a < m; ++a) pos[followers[a]] = static_cast<std::ptrdiff_t>(a);
  Eigen::MatrixXd lap = Eigen::MatrixXd::Zero(m, m);
  for (std::size_t a = 0; a < m; ++a) {
    double diag = 0.0;
    for (const auto& e : topo.out_edges(followers[a])) {
      diag += e.weight;
      if (pos[e.to] >= 0) lap(a, pos[e.to]) = -e.weight;
    }
    lap(a, a) = diag;
  }
  return lap;
}

bool is_strongly_connected(const Topology& topo) {
  const std::size_t n = topo.size();
  if (n <= 1) return true;
  auto all = [](const std::vector<bool>& v) { return std::all_of(v.begin(), v.end(), [](bool b) { return b; }); };
  return all(reach(topo, {0}, false)) && all(reach(topo, {0}, true));
}

std::vector<bool> can_reach(const Topology& topo, const LeaderSet& targets) {
  targets.check_range(topo.size());
  return reach(topo, targets.nodes(), true);
}

// ---------------------------------------------------------------------------
// Generators

Topology disk_graph(std::span<const Point> positions, double comm_range, Interval weights,
                    bool symmetric_weights, Rng& rng) {
  const std::size_t n = positions.size();
  std::vector<Edge> edges;
  const double r2 = comm_range * comm_range;
  for (NodeId i = 0; i < n; ++i) {
    for (NodeId j = i + 1; j < n; ++j) {
      const double dx = positions[i].x - positions[j].x;
      const double dy = positions[i].y - positions[j].y;
      if (dx * dx + dy * dy <= r2) {
        const double wij = draw_weight(weights, rng);
        const double wji = symmetric_weights ? wij : draw_weight(weights, rng);
        edges.push_back({i, j, wij});
        edges.push_back({j, i, wji});
      }
    }
  }
  return Topology(n, std::move(edges));
}

Topology gen_geometric(const GeometricParams& params, Rng& rng) {
  if (params.n < 2) throw DomainError("geometric topology needs at least 2 nodes");
  if (!(params.comm_range > 0.0)) {
    throw GenerationError("communication range must be positive; no links are possible", 0);
  }
  std::uniform_real_distribution<double> coord(0.0, params.area_side);
  std::vector<Point> pos(params.n);
  for (std::size_t attempt = 1; attempt <= params.max_attempts; ++attempt) {
    for (auto& p : pos) {
      p.x = coord(rng);
      p.y = coord(rng);
    }
    Topology topo = disk_graph(pos, params.comm_range, params.weights, params.symmetric_weights, rng);
    if (topo.strongly_connected()) return topo;
  }
  throw GenerationError("no strongly connected placement after " +
                            std::to_string(params.max_attempts) + " attempts",
                        params.max_attempts);
}

Topology fail_links(const Topology& base, double fail_prob, Rng& rng) {
  if (!(fail_prob >= 0.0 && fail_prob < 1.0)) throw DomainError("fail_prob must lie in [0,1)");
  std::bernoulli_distribution fails(fail_prob);
  std::vector<Edge> kept;
  kept.reserve(base.edge_count());
  // Decide each unordered pair once, at its lower-index edge.
  std::map<std::pair<NodeId, NodeId>, bool> dropped;
  for (const auto& e : base.edges()) {
    const auto key = std::minmax(e.from, e.to);
    auto it = dropped.find(key);
    if (it == dropped.end()) it = dropped.emplace(key, fail_prob > 0.0 && fails(rng)).first;
    if (!it->second) kept.push_back(e);
  }
  return Topology(base.size(), std::move(kept));
}

EpochSequence gen_link_failures(const Topology& base, double fail_prob, std::size_t epochs,
                                double dwell, Rng& rng) {
  if (epochs == 0) throw DomainError("epoch count must be at least 1");
  std::vector<Epoch> out;
  out.reserve(epochs);
  for (std::size_t m = 0; m < epochs; ++m) out.push_back({fail_links(base, fail_prob, rng), dwell});
  return EpochSequence(std::move(out), dwell);
}

WaypointModel WaypointModel::draw(const WaypointParams& params, Rng& rng) {
  if (params.n < 2) throw DomainError("waypoint model needs at least 2 nodes");
  WaypointModel model;
  model.params_ = params;
  std::uniform_real_distribution<double> coord(0.0, params.area_side);
  model.offsets_.resize(params.n);
  for (auto& p : model.offsets_) {
    p.x = coord(rng);
    p.y = coord(rng);
  }
  model.pair_weights_.resize(params.n, params.n);
  for (NodeId i = 0; i < params.n; ++i) {
    model.pair_weights_(i, i) = 0.0;
    for (NodeId j = i + 1; j < params.n; ++j) {
      const double wij = draw_weight(params.weights, rng);
      const double wji = params.symmetric_weights ? wij : draw_weight(params.weights, rng);
      model.pair_weights_(i, j) = wij;
      model.pair_weights_(j, i) = wji;
    }
  }
  return model;
}

Topology WaypointModel::topology_at(Point reference, Rng& rng) const {
  const std::size_t n = params_.n;
  std::uniform_real_distribution<double> angle(0.0, 2.0 * std::numbers::pi);
  std::vector<Point> pos(n);
  for (NodeId i = 0; i < n; ++i) {
    const double mag = draw_weight(params_.disturbance, rng);
    const double a = angle(rng);
    pos[i] = {reference.x + offsets_[i].x + mag * std::cos(a),
              reference.y + offsets_[i].y + mag * std::sin(a)};
  }
  std::vector<Edge> edges;
  const double r2 = params_.comm_range * params_.comm_range;
  for (NodeId i = 0; i < n; ++i) {
    for (NodeId j = i + 1; j < n; ++j) {
      const double dx = pos[i].x - pos[j].x;
      const double dy = pos[i].y - pos[j].y;
      if (dx * dx + dy * dy <= r2) {
        edges.push_back({i, j, pair_weights_(i, j)});
        edges.push_back({j, i, pair_weights_(j, i)});
      }
    }
  }
  return Topology(n, std::move(edges));
}

Point WaypointModel::step(Point reference, double dwell, Rng& rng) const {
  const double len = params_.ref_speed * dwell;
  if (len <= 0.0) return reference;
  const double a = std::uniform_real_distribution<double>(0.0, 2.0 * std::numbers::pi)(rng);
  return {reflect(reference.x + len * std::cos(a), params_.area_side),
          reflect(reference.y + len * std::sin(a), params_.area_side)};
}

EpochSequence WaypointModel::simulate(Point start, std::size_t epochs, double dwell, Rng& rng) const {
  if (epochs == 0) throw DomainError("epoch count must be at least 1");
  std::vector<Epoch> out;
  out.reserve(epochs);
  Point ref = start;
  for (std::size_t m = 0; m < epochs; ++m) {
    out.push_back({topology_at(ref, rng), dwell});
    ref = step(ref, dwell, rng);
  }
  return EpochSequence(std::move(out), dwell);
}

EpochSequence gen_waypoint(const WaypointParams& params, std::size_t epochs, double dwell, Rng& rng) {
  const WaypointModel model = WaypointModel::draw(params, rng);
  std::uniform_real_distribution<double> coord(0.0, params.area_side);
  const Point start{coord(rng), coord(rng)};
  return model.simulate(start, epochs, dwell, rng);
}

}  // namespace leadsel
