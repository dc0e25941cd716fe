#include "leadsel/dynamics.hpp"
#include "leadsel/errors.hpp"
#include "leadsel/expm.hpp"
#include "leadsel/walk_oracle.hpp"

#include "support.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace leadsel;
using testing_support::random_connected;

namespace {

Topology two_node() { return Topology(2, {{0, 1, 1.0}, {1, 0, 1.0}}); }

}  // namespace

TEST(WalkChainTest, ValidatesRows) {
  Eigen::MatrixXd bad(2, 2);
  bad << 0.5, 0.6, 0.0, 1.0;
  EXPECT_THROW(WalkChain(bad, 1.0, LeaderSet{1}), DomainError);
  Eigen::MatrixXd not_absorbing(2, 2);
  not_absorbing << 0.5, 0.5, 0.5, 0.5;
  EXPECT_THROW(WalkChain(not_absorbing, 1.0, LeaderSet{1}), DomainError);
}

TEST(HitProbabilities, ZeroStepsIsIdentity) {
  Rng rng(1);
  const WalkChain chain = WalkChain::from_topology(random_connected(5, 0.5, rng), LeaderSet{0}, 0.1);
  EXPECT_EQ(hit_probabilities(chain, 0), Eigen::MatrixXd::Identity(5, 5));
}

TEST(HitProbabilities, TwoNodeByHand) {
  Eigen::MatrixXd p(2, 2);
  p << 0.5, 0.5, 0.0, 1.0;
  const WalkChain chain(p, 1.0, LeaderSet{1});
  const Eigen::MatrixXd h = hit_probabilities(chain, 2);
  EXPECT_DOUBLE_EQ(h(0, 0), 0.25);
  EXPECT_DOUBLE_EQ(h(0, 1), 0.75);
  EXPECT_DOUBLE_EQ(escape_probability(chain, 1, 0), 0.5);
  EXPECT_EQ(escape_probability(chain, 5, 1), 0.0);
}

TEST(HitProbabilities, MatchContinuousTimeTransition) {
  Rng rng(2);
  const Topology t = random_connected(6, 0.5, rng);
  const LeaderSet s{1, 4};
  const double time = 0.8;
  for (std::size_t tau : {4u, 32u}) {
    const WalkChain chain = WalkChain::from_topology(t, s, time / static_cast<double>(tau));
    const Eigen::MatrixXd pt = expm_neg(build_laplacian(t, s), time);
    EXPECT_LE((hit_probabilities(chain, tau) - pt).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(HitProbabilities, AbsorptionGrowsWithSteps) {
  Rng rng(3);
  const WalkChain chain = WalkChain::from_topology(random_connected(7, 0.4, rng), LeaderSet{2}, 0.05);
  for (NodeId i = 0; i < 7; ++i) {
    double prev = 1.0;
    for (std::size_t tau = 0; tau < 40; ++tau) {
      const double esc = escape_probability(chain, tau, i);
      EXPECT_LE(esc, prev + 1e-15);
      prev = esc;
    }
  }
}

TEST(HitProbabilities, BoundSplitsIntoWalkTerms) {
  // Follower i contributes sum_{j not in S} Pr(X = j)^p + Pr(escape)^p.
  Rng rng(4);
  const Topology t = random_connected(6, 0.5, rng);
  const LeaderSet s{0, 5};
  const WalkChain chain = WalkChain::from_topology(t, s, 0.5 / 16);
  const Eigen::MatrixXd h = hit_probabilities(chain, 16);
  double total = 0.0;
  for (NodeId i : s.complement(6)) {
    for (NodeId j : s.complement(6)) total += std::pow(h(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)), 2.0);
    total += std::pow(escape_probability(chain, 16, i), 2.0);
  }
  EXPECT_NEAR(total, error_bound(t, s, 0.5, 2.0), 1e-12);
}

TEST(SimulateEscape, TwoNodeHalf) {
  Eigen::MatrixXd p(2, 2);
  p << 0.5, 0.5, 0.0, 1.0;
  const WalkChain chain(p, 1.0, LeaderSet{1});
  const EscapeEstimate est = simulate_escape(chain, 1, 0, 20000, 7);
  EXPECT_NEAR(est.mean, 0.5, 3.0 * est.std_error);
}

TEST(SimulateEscape, AgreesWithExactWithinThreeStandardErrors) {
  Rng rng(5);
  const WalkChain chain = WalkChain::from_topology(random_connected(7, 0.4, rng), LeaderSet{3}, 0.05);
  const double exact = escape_probability(chain, 10, 0);
  const EscapeEstimate est = simulate_escape(chain, 10, 0, 100000, 11, 4);
  EXPECT_EQ(est.trajectories, 100000u);
  EXPECT_NEAR(est.mean, exact, 3.0 * est.std_error);
}

TEST(SimulateEscape, ShardedRunIsReproducible) {
  Rng rng(6);
  const WalkChain chain = WalkChain::from_topology(random_connected(5, 0.5, rng), LeaderSet{0}, 0.1);
  const EscapeEstimate a = simulate_escape(chain, 8, 2, 5000, 3, 3);
  const EscapeEstimate b = simulate_escape(chain, 8, 2, 5000, 3, 3);
  EXPECT_EQ(a.mean, b.mean);
  EXPECT_THROW(simulate_escape(chain, 8, 9, 10, 3), DomainError);
}

TEST(Supermodular, ModularFunctionPasses) {
  const std::vector<double> w{0.3, 1.2, -0.5, 2.0, 0.7};
  auto f = [&](const LeaderSet& s) {
    double v = 0.0;
    for (NodeId j : s) v += w[j];
    return v;
  };
  const SupermodularReport rep = check_supermodular(f, 5, 10);
  EXPECT_TRUE(rep.passed());
  EXPECT_GT(rep.quadruples, 0u);
}

TEST(Supermodular, NegatedCoveragePasses) {
  // Coverage is submodular, so its negation is supermodular.
  const std::vector<std::vector<int>> covers{{0, 1}, {1, 2}, {2, 3, 4}, {0, 4}, {5}};
  auto f = [&](const LeaderSet& s) {
    std::vector<bool> hit(6, false);
    for (NodeId j : s) {
      for (int e : covers[j]) hit[static_cast<std::size_t>(e)] = true;
    }
    return -static_cast<double>(std::count(hit.begin(), hit.end(), true));
  };
  EXPECT_TRUE(check_supermodular(f, 5, 10).passed());
}

TEST(Supermodular, ConcaveCardinalityFails) {
  auto f = [](const LeaderSet& s) {
    const auto k = static_cast<double>(s.size());
    return -k * k;
  };
  const SupermodularReport rep = check_supermodular(f, 4, 10);
  EXPECT_FALSE(rep.passed());
  EXPECT_LT(rep.worst_slack, 0.0);
  const auto& v = rep.violations.front();
  EXPECT_LT(v.lhs, v.rhs);
}

TEST(Supermodular, BoundOnSmallGraphs) {
  Rng rng(7);
  for (int inst = 0; inst < 5; ++inst) {
    const ErrorEvaluator ev(random_connected(6, 0.4, rng), 0.3, 2.0);
    EXPECT_TRUE(check_supermodular([&](const LeaderSet& s) { return ev(s); }, 6, 8).passed());
  }
}

TEST(Supermodular, RefusesLargeGround) {
  auto f = [](const LeaderSet&) { return 0.0; };
  EXPECT_THROW(check_supermodular(f, 11, 11), RefusalError);
  EXPECT_THROW(check_supermodular(f, 9, 8), RefusalError);
}

TEST(Masks, SetFromMask) {
  EXPECT_EQ(set_from_mask(0b10110, 5), (LeaderSet{1, 2, 4}));
  EXPECT_TRUE(set_from_mask(0, 3).empty());
}

TEST(WalkChainTest, TwoNodeFromTopology) {
  const WalkChain chain = WalkChain::from_topology(two_node(), LeaderSet{1}, std::log(2.0));
  EXPECT_NEAR(chain.transition(0, 1), 0.5, 1e-15);
  EXPECT_EQ(chain.size(), 2u);
}
