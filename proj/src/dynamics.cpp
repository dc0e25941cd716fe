#include "leadsel/dynamics.hpp"

#include "leadsel/errors.hpp"
#include "leadsel/expm.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace leadsel {

namespace {

void check_order(double p) {
  if (!(p >= 1.0) || !std::isfinite(p)) throw DomainError("norm order p must lie in [1, inf)");
}

double pow_p(double x, double p) {
  if (p == 1.0) return x;
  if (p == 2.0) return x * x;
  return std::pow(x, p);
}

// Follower-block product for a fixed leader set held across all epochs.
double sequence_bound(const EpochSequence& seq, const LeaderSet& leaders, double p) {
  const std::size_t n = seq.nodes();
  leaders.check_range(n);
  const auto followers = leaders.complement(n);
  if (followers.empty()) return 0.0;
  const auto m = static_cast<Eigen::Index>(followers.size());
  Eigen::MatrixXd prod = Eigen::MatrixXd::Identity(m, m);
  for (const auto& epoch : seq.epochs()) {
    const Eigen::MatrixXd lap = follower_laplacian(epoch.topology, followers);
    prod = expm_metzler(-epoch.dwell * lap) * prod;
  }
  return bound_from_follower_block(prod, p);
}

}  // namespace

double conjugate_exponent(double p) {
  check_order(p);
  return p == 1.0 ? std::numeric_limits<double>::infinity() : p / (p - 1.0);
}

double bound_from_follower_block(const Eigen::MatrixXd& block, double p) {
  check_order(p);
  double total = 0.0;
  for (Eigen::Index i = 0; i < block.rows(); ++i) {
    double inner = 0.0;
    double row_sum = 0.0;
    for (Eigen::Index j = 0; j < block.cols(); ++j) {
      const double e = std::max(0.0, block(i, j));
      inner += pow_p(e, p);
      row_sum += e;
    }
    total += inner + pow_p(std::min(1.0, row_sum), p);
  }
  return total;
}

Eigen::MatrixXd follower_transition(const Topology& topo, const LeaderSet& leaders, double t) {
  leaders.check_range(topo.size());
  if (!(t >= 0.0)) throw DomainError("time must be nonnegative");
  const auto followers = leaders.complement(topo.size());
  if (followers.empty()) return {};
  return expm_metzler(-t * follower_laplacian(topo, followers));
}

double error_bound(const Topology& topo, const LeaderSet& leaders, double t, double p) {
  check_order(p);
  return bound_from_follower_block(follower_transition(topo, leaders, t), p);
}

// ---------------------------------------------------------------------------

ErrorEvaluator::ErrorEvaluator(Topology topo, double horizon, double p)
    : topo_(std::move(topo)), horizon_(horizon), p_(p), memo_(std::make_unique<Memo>()) {
  if (!(horizon_ > 0.0) || !std::isfinite(horizon_)) throw DomainError("horizon must be positive");
  check_order(p_);
}

double ErrorEvaluator::operator()(const LeaderSet& s) const {
  if (auto hit = memo_->bounds.find(s)) return *hit;
  return memo_->bounds.insert(s, error_bound(topo_, s, horizon_, p_));
}

double ErrorEvaluator::scaled_bound(const LeaderSet& s, double norm_budget) const {
  if (!(norm_budget > 0.0)) throw DomainError("norm budget K must be positive");
  return norm_budget * std::pow((*this)(s), 1.0 / p_);
}

Eigen::MatrixXd ErrorEvaluator::transition(const LeaderSet& s) const {
  if (auto hit = memo_->transitions.find(s)) return *hit;
  return memo_->transitions.insert(s, expm_neg(build_laplacian(topo_, s), horizon_));
}

double ErrorEvaluator::f_max() const {
  std::call_once(memo_->f_max_once, [this] {
    double best = 0.0;
    for (NodeId v = 0; v < topo_.size(); ++v) best = std::max(best, (*this)(LeaderSet{v}));
    memo_->f_max = best;
  });
  return memo_->f_max;
}

SequenceEvaluator::SequenceEvaluator(EpochSequence seq, double p)
    : seq_(std::move(seq)), p_(p), memo_(std::make_unique<LeaderSetMemo<double>>()) {
  check_order(p_);
}

double SequenceEvaluator::operator()(const LeaderSet& s) const {
  if (auto hit = memo_->find(s)) return *hit;
  return memo_->insert(s, sequence_bound(seq_, s, p_));
}

Eigen::MatrixXd SequenceEvaluator::transition(const LeaderSet& s) const {
  const auto n = static_cast<Eigen::Index>(seq_.nodes());
  Eigen::MatrixXd prod = Eigen::MatrixXd::Identity(n, n);
  for (const auto& epoch : seq_.epochs()) {
    prod = expm_neg(build_laplacian(epoch.topology, s), epoch.dwell) * prod;
  }
  return prod;
}

AverageObjective::AverageObjective(std::vector<std::shared_ptr<const SetObjective>> parts)
    : parts_(std::move(parts)) {
  if (parts_.empty()) throw DomainError("average of zero objectives");
  n_ = parts_.front()->ground_size();
  for (const auto& part : parts_) {
    if (part->ground_size() != n_) throw DomainError("objectives disagree on the ground set");
  }
}

double AverageObjective::operator()(const LeaderSet& s) const {
  double sum = 0.0;
  for (const auto& part : parts_) sum += (*part)(s);
  return sum / static_cast<double>(parts_.size());
}

// ---------------------------------------------------------------------------

namespace {

void check_anchors(const LeaderConfig& config, const StateVector& x0, std::size_t n) {
  if (static_cast<std::size_t>(x0.values.size()) != n) {
    throw DomainError("state vector length does not match the node count");
  }
  config.leaders().check_range(n);
  for (const auto& [j, anchor] : config.anchors()) {
    const double tol = 1e-12 * std::max(1.0, std::abs(anchor));
    if (std::abs(x0.values[static_cast<Eigen::Index>(j)] - anchor) > tol) {
      throw DomainError("initial state of leader " + std::to_string(j) +
                        " differs from its anchor");
    }
  }
}

void pin_anchors(const LeaderConfig& config, Eigen::VectorXd& x) {
  for (const auto& [j, anchor] : config.anchors()) x[static_cast<Eigen::Index>(j)] = anchor;
}

}  // namespace

StateVector propagate(const Topology& topo, const LeaderConfig& config, const StateVector& x0,
                      double t) {
  check_anchors(config, x0, topo.size());
  StateVector out{expm_neg(build_laplacian(topo, config.leaders()), t) * x0.values, x0.time + t};
  pin_anchors(config, out.values);
  return out;
}

StateVector propagate(const EpochSequence& seq, const LeaderConfig& config, const StateVector& x0) {
  check_anchors(config, x0, seq.nodes());
  StateVector x = x0;
  for (const auto& epoch : seq.epochs()) {
    x.values = expm_neg(build_laplacian(epoch.topology, config.leaders()), epoch.dwell) * x.values;
    x.time += epoch.dwell;
    pin_anchors(config, x.values);
  }
  return x;
}

double containment_error(const LeaderConfig& config, const Eigen::VectorXd& x, double p) {
  check_order(p);
  const auto [lo, hi] = config.hull();
  double sum = 0.0;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double d = std::max({lo - x[i], 0.0, x[i] - hi});
    sum += pow_p(d, p);
  }
  return std::pow(sum, 1.0 / p);
}

double convergence_error(const Topology& topo, const LeaderConfig& config, const StateVector& x0,
                         double t, double p) {
  if (!(t > 0.0)) throw DomainError("convergence error needs t > 0");
  check_order(p);
  config.hull();  // rejects S = {}
  return containment_error(config, propagate(topo, config, x0, t).values, p);
}

// ---------------------------------------------------------------------------

TotalError total_error(const Topology& topo, const LeaderSet& leaders, double p, double tol) {
  check_order(p);
  if (!(tol > 0.0)) throw DomainError("tolerance must be positive");
  leaders.check_range(topo.size());
  if (leaders.empty()) throw DivergenceError("total error diverges without leaders");
  const auto reach = can_reach(topo, leaders);
  for (NodeId i = 0; i < topo.size(); ++i) {
    if (!reach[i]) {
      throw DivergenceError("node " + std::to_string(i) + " cannot reach any leader; total error diverges");
    }
  }
  const auto followers = leaders.complement(topo.size());
  if (followers.empty()) return {};
  const Eigen::MatrixXd lap = follower_laplacian(topo, followers);
  auto integrand = [&](double t) { return bound_from_follower_block(expm_metzler(-t * lap), p); };

  using Quad = boost::math::quadrature::gauss_kronrod<double, 31>;
  const double max_rate = lap.diagonal().maxCoeff();
  double horizon = max_rate > 0.0 ? 4.0 / max_rate : 1.0;
  double value = Quad::integrate(integrand, 0.0, horizon, 15, 1e-12);
  double tail = std::numeric_limits<double>::infinity();
  for (int doubling = 0; doubling < 200; ++doubling) {
    // Exponential decay fitted over the last tenth of [0, T].
    const double g_end = integrand(horizon);
    const double g_mid = integrand(0.9 * horizon);
    if (g_end <= 0.0) {
      tail = 0.0;
    } else if (g_mid > g_end) {
      const double rate = std::log(g_mid / g_end) / (0.1 * horizon);
      tail = g_end / rate;
    }
    if (tail <= 0.5 * tol) break;
    value += Quad::integrate(integrand, horizon, 2.0 * horizon, 15, 1e-12);
    horizon *= 2.0;
  }
  if (!(tail <= 0.5 * tol)) throw DivergenceError("total error tail did not decay");
  return {value + tail, horizon, tail};
}

double horizon_for_bound(const Topology& topo, const LeaderSet& leaders, double p, double beta) {
  check_order(p);
  leaders.check_range(topo.size());
  const auto followers = leaders.complement(topo.size());
  // At t = 0 every follower contributes 1 + 1.
  if (beta >= 2.0 * static_cast<double>(followers.size())) {
    throw DomainError("bound target is already met at t = 0");
  }
  // A follower that cannot reach S escapes with probability 1 forever and
  // contributes at least 1 at every t.
  const auto reach = can_reach(topo, leaders);
  const auto stuck = static_cast<double>(std::count(reach.begin(), reach.end(), false));
  if (beta <= stuck) throw DivergenceError("bound never falls below the target");

  const Eigen::MatrixXd lap = follower_laplacian(topo, followers);
  auto bound_at = [&](double t) { return bound_from_follower_block(expm_metzler(-t * lap), p); };

  const double max_rate = lap.diagonal().maxCoeff();
  double lo = 0.0;
  double hi = max_rate > 0.0 ? 1.0 / max_rate : 1.0;
  int doublings = 0;
  while (bound_at(hi) > beta) {
    lo = hi;
    hi *= 2.0;
    if (++doublings > 80) throw DivergenceError("bound never falls below the target");
  }
  for (int it = 0; it < 100 && (hi - lo) > 1e-10 * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    (bound_at(mid) > beta ? lo : hi) = mid;
  }
  return hi;
}

// ---------------------------------------------------------------------------

double dynamic_error_bound(const EpochSequence& seq, const LeaderSet& leaders, double p) {
  check_order(p);
  return sequence_bound(seq, leaders, p);
}

Estimate dynamic_error_bound(const SequenceSampler& sampler, const LeaderSet& leaders, double p,
                             std::size_t samples, Rng& rng) {
  if (samples == 0) throw DomainError("need at least one Monte Carlo sample");
  double sum = 0.0;
  double sum_sq = 0.0;
  for (std::size_t k = 0; k < samples; ++k) {
    const double v = dynamic_error_bound(sampler(rng), leaders, p);
    sum += v;
    sum_sq += v * v;
  }
  const double n = static_cast<double>(samples);
  const double mean = sum / n;
  double se = 0.0;
  if (samples > 1) {
    const double var = std::max(0.0, (sum_sq - n * mean * mean) / (n - 1.0));
    se = std::sqrt(var / n);
  }
  return {mean, se, samples};
}

PerEpochMetric per_epoch_metric(const EpochSequence& seq, std::span<const LeaderSet> sets, double p) {
  if (sets.size() != seq.size()) {
    throw DomainError("need exactly one leader set per epoch (" + std::to_string(seq.size()) +
                      " epochs, " + std::to_string(sets.size()) + " sets)");
  }
  PerEpochMetric out;
  out.terms.reserve(seq.size());
  double sum = 0.0;
  for (std::size_t m = 0; m < seq.size(); ++m) {
    const double term = error_bound(seq[m].topology, sets[m], seq[m].dwell, p);
    out.terms.push_back(term);
    sum += term;
  }
  out.average = sum / static_cast<double>(seq.size());
  return out;
}

}  // namespace leadsel
