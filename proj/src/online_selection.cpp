#include "leadsel/online_selection.hpp"

#include "leadsel/errors.hpp"
#include "leadsel/static_selection.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace leadsel {

namespace {

constexpr double kRescaleBelow = 1e-100;

std::size_t sample_index(std::span<const double> weights, Rng& rng) {
  double total = 0.0;
  for (double w : weights) total += w;
  if (!(total > 0.0) || !std::isfinite(total)) throw NumericError("weights cannot be normalized");
  const double u = std::uniform_real_distribution<double>(0.0, total)(rng);
  double acc = 0.0;
  std::size_t last = 0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (weights[i] <= 0.0) continue;
    acc += weights[i];
    last = i;
    if (u < acc) return i;
  }
  return last;
}

double mean_of(std::span<const double> xs) {
  return xs.empty() ? 0.0 : std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
}

double std_error_of(std::span<const double> xs) {
  if (xs.size() < 2) return 0.0;
  const double m = mean_of(xs);
  double ss = 0.0;
  for (double x : xs) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(xs.size() - 1) / static_cast<double>(xs.size()));
}

double binomial(std::size_t n, std::size_t k) {
  double c = 1.0;
  for (std::size_t i = 1; i <= k; ++i) c = c * static_cast<double>(n - k + i) / static_cast<double>(i);
  return c;
}

}  // namespace

// ---------------------------------------------------------------------------

RandomizedExperts::RandomizedExperts(std::size_t n, double eta) : w_(n, 1.0), eta_(eta) {
  if (n == 0) throw DomainError("experts need at least one action");
  if (!(eta >= 0.0 && eta <= 1.0)) throw DomainError("eta must lie in [0, 1]");
}

double RandomizedExperts::default_eta(std::size_t n, std::optional<std::size_t> horizon) {
  if (!horizon || *horizon == 0) return 0.3;
  return std::min(1.0, std::sqrt(8.0 * std::log(static_cast<double>(n)) / static_cast<double>(*horizon)));
}

std::size_t RandomizedExperts::select(Rng& rng) const { return sample_index(w_, rng); }

void RandomizedExperts::observe(std::span<const double> losses) {
  if (losses.size() != w_.size()) throw DomainError("one loss per action required");
  for (std::size_t j = 0; j < w_.size(); ++j) {
    if (!(losses[j] >= 0.0)) throw DomainError("losses must be nonnegative");
    w_[j] *= std::exp(-eta_ * losses[j]);
  }
  const double top = *std::max_element(w_.begin(), w_.end());
  if (!(top > 0.0)) throw NumericError("every expert weight underflowed");
  if (top < kRescaleBelow) {
    for (double& w : w_) w /= top;
  }
  ++epoch_;
}

std::size_t RandomizedExperts::step(std::span<const double> losses, Rng& rng) {
  const std::size_t a = select(rng);
  observe(losses);
  return a;
}

std::vector<double> RandomizedExperts::probabilities() const {
  const double total = std::accumulate(w_.begin(), w_.end(), 0.0);
  std::vector<double> p(w_.size());
  for (std::size_t j = 0; j < w_.size(); ++j) p[j] = w_[j] / total;
  return p;
}

// ---------------------------------------------------------------------------

std::string_view to_string(ExponentMode m) {
  switch (m) {
    case ExponentMode::normalized_loss: return "normalized_loss";
    case ExponentMode::raw_loss: return "raw_loss";
    case ExponentMode::literal_gain: return "literal_gain";
  }
  return "?";
}

ExponentMode parse_exponent_mode(std::string_view name) {
  if (name == "normalized_loss") return ExponentMode::normalized_loss;
  if (name == "raw_loss") return ExponentMode::raw_loss;
  if (name == "literal_gain") return ExponentMode::literal_gain;
  throw DomainError("unknown exponent mode '" + std::string(name) + "'");
}

ExpertsState::ExpertsState(std::size_t n, DynamicLeaderParams params)
    : n_(n), params_(params), w_(Eigen::MatrixXd::Ones(static_cast<Eigen::Index>(n),
                                                         static_cast<Eigen::Index>(params.k))) {
  if (params_.k > n_) throw DomainError("k exceeds the node count");
  if (!(params_.beta > 0.0 && params_.beta <= 1.0)) throw DomainError("beta must lie in (0, 1]");
  if (!(params_.p >= 1.0)) throw DomainError("p must be at least 1");
}

Eigen::VectorXd ExpertsState::probabilities(std::size_t slot, const LeaderSet& taken) const {
  Eigen::VectorXd pi = w_.col(static_cast<Eigen::Index>(slot));
  for (NodeId v : taken) pi[static_cast<Eigen::Index>(v)] = 0.0;
  const double total = pi.sum();
  if (!(total > 0.0)) throw NumericError("slot weights cannot be normalized");
  return pi / total;
}

void ExpertsState::observe(const Topology& observed, double dwell) {
  if (observed.size() != n_) throw DomainError("observed topology has the wrong node count");
  if (previous_.empty()) return;
  const ErrorEvaluator f(observed, dwell, params_.p);
  const double f_max = params_.mode == ExponentMode::normalized_loss ? f.f_max() : 1.0;
  const double log_beta = std::log(params_.beta);

  LeaderSet prefix;
  for (std::size_t j = 0; j < params_.k; ++j) {
    const double base = f(prefix);
    auto col = w_.col(static_cast<Eigen::Index>(j));
    for (NodeId i = 0; i < n_; ++i) {
      const double value = prefix.contains(i) ? base : f(prefix.with(i));
      double z = 0.0;
      switch (params_.mode) {
        case ExponentMode::normalized_loss: z = f_max > 0.0 ? value / f_max : 0.0; break;
        case ExponentMode::raw_loss: z = value; break;
        case ExponentMode::literal_gain: z = base - value; break;
      }
      col[static_cast<Eigen::Index>(i)] *= std::exp(z * log_beta);
    }
    const double top = col.maxCoeff();
    if (!(top > 0.0) || !std::isfinite(top)) throw NumericError("every weight in a slot underflowed");
    if (top < kRescaleBelow) col /= top;
    prefix.insert(previous_[j]);
  }
}

std::vector<NodeId> ExpertsState::sample(Rng& rng) {
  std::vector<NodeId> chosen;
  LeaderSet taken;
  for (std::size_t j = 0; j < params_.k; ++j) {
    const Eigen::VectorXd pi = probabilities(j, taken);
    const NodeId v = sample_index(std::span<const double>(pi.data(), static_cast<std::size_t>(pi.size())), rng);
    chosen.push_back(v);
    taken.insert(v);
  }
  previous_ = chosen;
  ++epoch_;
  return chosen;
}

std::vector<NodeId> select_dynamic_leaders(ExpertsState& state, const Topology* observed,
                                           double observed_dwell, Rng& rng) {
  if (observed != nullptr) state.observe(*observed, observed_dwell);
  return state.sample(rng);
}

// ---------------------------------------------------------------------------

FixedSetAverage::FixedSetAverage(const EpochSequence& seq, double p) : n_(seq.nodes()) {
  parts_.reserve(seq.size());
  for (const auto& e : seq.epochs()) parts_.emplace_back(e.topology, e.dwell, p);
}

double FixedSetAverage::operator()(const LeaderSet& s) const {
  double sum = 0.0;
  for (const auto& f : parts_) sum += f(s);
  return sum / static_cast<double>(parts_.size());
}

RegretLedger ledger_from_losses(std::vector<double> losses, LeaderSet best_set, double best_objective,
                                bool exhaustive) {
  RegretLedger out;
  out.average_loss = mean_of(losses);
  out.per_epoch_losses = std::move(losses);
  out.best_fixed_set = std::move(best_set);
  out.best_fixed_objective = best_objective;
  out.regret = out.average_loss - best_objective;
  out.best_is_exhaustive = exhaustive;
  return out;
}

RegretLedger regret_of_run(const EpochSequence& seq, std::span<const LeaderSet> chosen, double p) {
  const PerEpochMetric metric = per_epoch_metric(seq, chosen, p);
  std::size_t k = 0;
  for (const auto& s : chosen) k = std::max(k, s.size());

  const FixedSetAverage fixed(seq, p);
  const std::size_t n = seq.nodes();
  if (binomial(n, k) <= 1e5) {
    auto best = exhaustive_best_k(fixed, k);
    return ledger_from_losses(metric.terms, std::move(best.set), best.value, true);
  }
  const auto greedy = select_k_leaders(fixed, k);
  return ledger_from_losses(metric.terms, greedy.set(), greedy.objective, false);
}

// ---------------------------------------------------------------------------

AdversarialReport adversarial_lower_bound_experiment(const AdversarialParams& params, Rng& rng) {
  const std::size_t n = params.n;
  const std::size_t r = params.r;
  if (n == 0 || r == 0 || params.trials == 0) throw DomainError("n, r and trials must be positive");
  if (!(params.sigma >= 0.0 && params.sigma <= 1.0)) throw DomainError("sigma must lie in [0, 1]");

  const double rd = static_cast<double>(r);
  const double log_n = std::log(static_cast<double>(n));
  const double scale = std::sqrt(rd / 2.0 * log_n);

  AdversarialReport out;
  out.lower_bound = scale / rd;
  out.experts_upper_scale = std::sqrt(rd * log_n / 2.0) / rd;
  std::vector<std::vector<double>> a_samples(n);
  std::vector<double> min_as;
  std::vector<double> bs;

  std::bernoulli_distribution coin(0.5);
  std::vector<double> losses(n);
  std::vector<double> a(n);
  for (std::size_t trial = 0; trial < params.trials; ++trial) {
    std::fill(a.begin(), a.end(), 0.0);
    std::optional<RandomizedExperts> experts;
    if (params.policy == AdversaryPolicy::experts) {
      experts.emplace(n, params.eta.value_or(RandomizedExperts::default_eta(n, r)));
    }
    std::uniform_int_distribution<std::size_t> pick(0, n - 1);
    double realized = 0.0;
    for (std::size_t m = 0; m < r; ++m) {
      for (std::size_t i = 0; i < n; ++i) losses[i] = coin(rng) ? 1.0 : params.sigma;
      const std::size_t chosen = experts ? experts->step(losses, rng) : pick(rng);
      realized += losses[chosen];
      for (std::size_t i = 0; i < n; ++i) a[i] += losses[i];
    }
    const double min_a = *std::min_element(a.begin(), a.end());
    out.regrets.push_back((realized - min_a) / rd);
    min_as.push_back(min_a);
    bs.push_back(scale > 0.0 ? (min_a - rd / 2.0) / scale : 0.0);
    for (std::size_t i = 0; i < n; ++i) a_samples[i].push_back(a[i]);
  }

  out.mean_regret = mean_of(out.regrets);
  out.regret_std_error = std_error_of(out.regrets);
  out.mean_min_a = mean_of(min_as);
  out.mean_b = mean_of(bs);
  for (const auto& s : a_samples) {
    out.a_means.push_back(mean_of(s));
    out.a_std_errors.push_back(std_error_of(s));
  }
  return out;
}

}  // namespace leadsel
