#include "leadsel/static_selection.hpp"

#include "leadsel/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>
#include <string>

namespace leadsel {

namespace {

// Stale gains within this much of the best fresh gain are re-evaluated before
// committing, so rounding-level supermodularity violations cannot change the
// pick relative to a full rescan.
constexpr double kLazySlack = 1e-9;

class Greedy {
 public:
  Greedy(const SetObjective& f, GreedyEngine engine) : f_(f), engine_(engine), n_(f.ground_size()) {
    current_ = eval(selected_);
  }

  double current() const noexcept { return current_; }
  std::size_t size() const noexcept { return selected_.size(); }
  std::size_t ground() const noexcept { return n_; }

  void step() {
    if (selected_.size() >= n_) throw DomainError("no candidates left");
    if (engine_ == GreedyEngine::naive || !std::isfinite(current_)) {
      queue_.clear();
      naive_step();
    } else {
      lazy_step();
    }
    ++round_;
  }

  SelectionResult finish() && {
    result_.objective = current_;
    result_.evaluations = evaluations_;
    return std::move(result_);
  }

 private:
  struct Entry {
    double gain;
    NodeId v;
    std::size_t round;
    double value;
  };
  struct Order {
    bool operator()(const Entry& a, const Entry& b) const {
      return a.gain != b.gain ? a.gain > b.gain : a.v < b.v;
    }
  };

  double eval(const LeaderSet& s) {
    ++evaluations_;
    return f_(s);
  }

  // Comparable score of adding a node whose resulting value is `value`. When
  // the current value is infinite, gains are not finite, so rank by value.
  double gain(double value) const {
    return std::isfinite(current_) ? current_ - value : -value;
  }

  Entry fresh(NodeId v) {
    const double value = eval(selected_.with(v));
    return {gain(value), v, round_, value};
  }

  void commit(const Entry& e) {
    selected_.insert(e.v);
    current_ = e.value;
    result_.leaders.push_back(e.v);
    result_.bound_trace.push_back(e.value);
  }

  void naive_step() {
    std::optional<Entry> best;
    for (NodeId v = 0; v < n_; ++v) {
      if (selected_.contains(v)) continue;
      const Entry e = fresh(v);
      if (!best || Order{}(e, *best)) best = e;
    }
    commit(*best);
  }

  void lazy_step() {
    if (queue_.empty()) {
      for (NodeId v = 0; v < n_; ++v) {
        if (!selected_.contains(v)) queue_.insert(fresh(v));
      }
    }
    for (;;) {
      const Entry top = *queue_.begin();
      if (top.round != round_) {
        queue_.erase(queue_.begin());
        queue_.insert(fresh(top.v));
        continue;
      }
      std::vector<NodeId> stale;
      for (auto it = queue_.begin(); it != queue_.end() && it->gain >= top.gain - kLazySlack; ++it) {
        if (it->round != round_) stale.push_back(it->v);
      }
      if (stale.empty()) {
        queue_.erase(queue_.begin());
        commit(top);
        return;
      }
      for (auto it = queue_.begin(); it != queue_.end();) {
        if (it->round != round_ && std::find(stale.begin(), stale.end(), it->v) != stale.end()) {
          it = queue_.erase(it);
        } else {
          ++it;
        }
      }
      for (NodeId v : stale) queue_.insert(fresh(v));
    }
  }

  const SetObjective& f_;
  GreedyEngine engine_;
  std::size_t n_;
  LeaderSet selected_;
  double current_ = 0.0;
  std::size_t round_ = 0;
  std::size_t evaluations_ = 0;
  std::set<Entry, Order> queue_;
  SelectionResult result_;
};

// Calls visit(subset) for every k-subset of {0..n-1} in lexicographic order.
template <class Visit>
void for_each_subset(std::size_t n, std::size_t k, Visit&& visit) {
  std::vector<NodeId> idx(k);
  std::iota(idx.begin(), idx.end(), NodeId{0});
  for (;;) {
    visit(LeaderSet(idx));
    std::size_t i = k;
    while (i > 0 && idx[i - 1] == n - k + (i - 1)) --i;
    if (i == 0) return;
    ++idx[i - 1];
    for (std::size_t j = i; j < k; ++j) idx[j] = idx[j - 1] + 1;
  }
}

}  // namespace

SelectionResult select_k_leaders(const SetObjective& f, std::size_t k, GreedyEngine engine) {
  const std::size_t n = f.ground_size();
  if (k < 1 || k > n) {
    throw DomainError("k = " + std::to_string(k) + " outside [1, " + std::to_string(n) + "]");
  }
  Greedy greedy(f, engine);
  while (greedy.size() < k) greedy.step();
  return std::move(greedy).finish();
}

SelectionResult select_minimal_leaders(const SetObjective& f, double alpha, GreedyEngine engine) {
  if (!(alpha >= 0.0)) throw DomainError("alpha must be nonnegative");
  Greedy greedy(f, engine);
  while (greedy.current() > alpha && greedy.size() < greedy.ground()) greedy.step();
  return std::move(greedy).finish();
}

// ---------------------------------------------------------------------------

std::string_view to_string(Baseline b) {
  switch (b) {
    case Baseline::random: return "random";
    case Baseline::max_degree: return "max_degree";
    case Baseline::average_degree: return "average_degree";
  }
  return "?";
}

Baseline parse_baseline(std::string_view name) {
  if (name == "random") return Baseline::random;
  if (name == "max_degree") return Baseline::max_degree;
  if (name == "average_degree") return Baseline::average_degree;
  throw DomainError("unknown baseline policy '" + std::string(name) + "'");
}

std::vector<NodeId> baseline_order(const Topology& topo, Baseline policy, Rng& rng) {
  const std::size_t n = topo.size();
  std::vector<NodeId> order(n);
  std::iota(order.begin(), order.end(), NodeId{0});
  switch (policy) {
    case Baseline::random:
      std::shuffle(order.begin(), order.end(), rng);
      break;
    case Baseline::max_degree:
      std::stable_sort(order.begin(), order.end(), [&](NodeId a, NodeId b) {
        return topo.out_degree(a) > topo.out_degree(b);
      });
      break;
    case Baseline::average_degree: {
      const double mean = n == 0 ? 0.0 : static_cast<double>(topo.edge_count()) / static_cast<double>(n);
      auto dist = [&](NodeId v) { return std::abs(static_cast<double>(topo.out_degree(v)) - mean); };
      std::stable_sort(order.begin(), order.end(), [&](NodeId a, NodeId b) { return dist(a) < dist(b); });
      break;
    }
  }
  return order;
}

SelectionResult select_baseline(const Topology& topo, std::size_t k, Baseline policy, Rng& rng,
                                const SetObjective* objective) {
  if (k > topo.size()) throw DomainError("k exceeds the node count");
  auto order = baseline_order(topo, policy, rng);
  SelectionResult out;
  out.leaders.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k));
  if (objective != nullptr) {
    LeaderSet s;
    for (NodeId v : out.leaders) {
      s.insert(v);
      out.bound_trace.push_back((*objective)(s));
      ++out.evaluations;
    }
    out.objective = out.bound_trace.empty() ? (*objective)(s) : out.bound_trace.back();
    if (out.bound_trace.empty()) ++out.evaluations;
  }
  return out;
}

SelectionResult fill_until(const SetObjective& f, std::span<const NodeId> order, double alpha) {
  if (!(alpha >= 0.0)) throw DomainError("alpha must be nonnegative");
  SelectionResult out;
  LeaderSet s;
  double value = f(s);
  out.evaluations = 1;
  for (NodeId v : order) {
    if (value <= alpha) break;
    s.insert(v);
    out.leaders.push_back(v);
    value = f(s);
    ++out.evaluations;
    out.bound_trace.push_back(value);
  }
  out.objective = value;
  return out;
}

// ---------------------------------------------------------------------------

TotalErrorObjective::TotalErrorObjective(Topology topo, double p, double tol)
    : topo_(std::move(topo)), p_(p), tol_(tol), memo_(std::make_unique<LeaderSetMemo<double>>()) {
  if (!topo_.strongly_connected()) {
    throw DomainError("integrated error needs a strongly connected topology");
  }
}

double TotalErrorObjective::operator()(const LeaderSet& s) const {
  if (s.empty()) return std::numeric_limits<double>::infinity();
  if (auto hit = memo_->find(s)) return *hit;
  return memo_->insert(s, total_error(topo_, s, p_, tol_).value);
}

SelectionResult select_k_total_error(const Topology& topo, std::size_t k, double p, double tol) {
  const TotalErrorObjective objective(topo, p, tol);
  return select_k_leaders(objective, k, GreedyEngine::lazy);
}

ExhaustiveResult exhaustive_best_k(const SetObjective& f, std::size_t k) {
  const std::size_t n = f.ground_size();
  if (k > n) throw DomainError("k exceeds the node count");
  ExhaustiveResult best{{}, std::numeric_limits<double>::infinity()};
  bool found = false;
  for_each_subset(n, k, [&](const LeaderSet& s) {
    const double v = f(s);
    if (!found || v < best.value) {
      best = {s, v};
      found = true;
    }
  });
  return best;
}

ExhaustiveResult exhaustive_minimal(const SetObjective& f, double alpha) {
  const std::size_t n = f.ground_size();
  for (std::size_t k = 0; k <= n; ++k) {
    const ExhaustiveResult best = exhaustive_best_k(f, k);
    if (best.value <= alpha) return best;
  }
  throw DomainError("no leader set meets alpha");
}

double max_singleton(const SetObjective& f) {
  double best = -std::numeric_limits<double>::infinity();
  for (NodeId v = 0; v < f.ground_size(); ++v) best = std::max(best, f(LeaderSet{v}));
  return best;
}

}  // namespace leadsel
