#include "leadsel/errors.hpp"
#include "leadsel/expm.hpp"
#include "leadsel/graph.hpp"

#include "oracles.hpp"
#include "support.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace leadsel;

TEST(Expm, ZeroLaplacianIsIdentity) {
  const Eigen::MatrixXd l = Eigen::MatrixXd::Zero(4, 4);
  EXPECT_EQ(expm_neg(l, 3.0), Eigen::MatrixXd::Identity(4, 4));
}

TEST(Expm, ZeroTimeIsIdentity) {
  Rng rng(1);
  const Topology t = testing_support::random_topology(5, 0.6, rng);
  EXPECT_TRUE(expm_neg(build_laplacian(t, {}), 0.0).isApprox(Eigen::MatrixXd::Identity(5, 5)));
}

TEST(Expm, TwoNodeClosedForm) {
  // One follower pulled toward a leader with weight 1: P_01 = 1 - e^{-t}.
  Eigen::MatrixXd l(2, 2);
  l << 1.0, -1.0, 0.0, 0.0;
  const Eigen::MatrixXd p = expm_neg(l, std::log(2.0));
  EXPECT_NEAR(p(0, 0), 0.5, 1e-15);
  EXPECT_NEAR(p(0, 1), 0.5, 1e-15);
  EXPECT_EQ(p(1, 1), 1.0);
  EXPECT_EQ(p(1, 0), 0.0);
}

TEST(Expm, MatchesSeriesOracle) {
  Rng rng(2);
  for (int inst = 0; inst < 50; ++inst) {
    const std::size_t n = testing_support::uniform_size(2, 12, rng);
    const Topology t = testing_support::random_topology(n, 0.5, rng, 0.0, 50.0);
    const LeaderSet s = testing_support::random_subset(n, testing_support::uniform_size(0, n, rng), rng);
    const double time = std::exp(std::uniform_real_distribution<double>(-4.0, 2.0)(rng));
    const Eigen::MatrixXd l = build_laplacian(t, s);
    const Eigen::MatrixXd got = expm_neg(l, time);
    const Eigen::MatrixXd want = oracle::series_expm_neg(l, time);
    EXPECT_LE((got - want).cwiseAbs().maxCoeff(), 1e-12) << "instance " << inst;
  }
}

TEST(Expm, SmallEntriesKeepRelativeAccuracy) {
  // Far corners of a path are tiny but positive; cancellation would lose them.
  std::vector<Edge> edges;
  const std::size_t n = 12;
  for (NodeId i = 0; i + 1 < n; ++i) {
    edges.push_back({i, i + 1, 1.0});
    edges.push_back({i + 1, i, 1.0});
  }
  const Eigen::MatrixXd l = build_laplacian(Topology(n, edges), LeaderSet{0});
  for (double time : {0.05, 0.5, 3.0}) {
    const Eigen::MatrixXd got = expm_neg(l, time);
    const Eigen::MatrixXd want = oracle::series_expm_neg(l, time);
    for (Eigen::Index i = 0; i < got.rows(); ++i) {
      for (Eigen::Index j = 0; j < got.cols(); ++j) {
        if (want(i, j) > 1e-280) {
          EXPECT_NEAR(got(i, j) / want(i, j), 1.0, 1e-9) << i << "," << j << " t=" << time;
        }
      }
    }
  }
}

TEST(Expm, SemigroupProperty) {
  Rng rng(3);
  const Topology t = testing_support::random_topology(8, 0.5, rng);
  const Eigen::MatrixXd l = build_laplacian(t, LeaderSet{2});
  const Eigen::MatrixXd a = expm_neg(l, 0.7);
  const Eigen::MatrixXd b = expm_neg(l, 1.3);
  EXPECT_LE((a * b - expm_neg(l, 2.0)).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Expm, RowStochasticForLongHorizons) {
  Rng rng(4);
  const Topology t = testing_support::random_topology(15, 0.4, rng, 0.0, 50.0);
  const Eigen::MatrixXd p = expm_neg(build_laplacian(t, LeaderSet{0, 5}), 1e4);
  EXPECT_GE(p.minCoeff(), 0.0);
  for (Eigen::Index i = 0; i < p.rows(); ++i) EXPECT_NEAR(p.row(i).sum(), 1.0, 1e-12);
}

TEST(Expm, RejectsNonLaplacian) {
  Eigen::MatrixXd bad(2, 2);
  bad << 1.0, 1.0, 0.0, 0.0;  // positive off-diagonal
  EXPECT_THROW(expm_neg(bad, 1.0), DomainError);
  Eigen::MatrixXd unbalanced(2, 2);
  unbalanced << 2.0, -1.0, 0.0, 0.0;
  EXPECT_THROW(expm_neg(unbalanced, 1.0), DomainError);
  Eigen::MatrixXd l(2, 2);
  l << 1.0, -1.0, 0.0, 0.0;
  EXPECT_THROW(expm_neg(l, -1.0), DomainError);
  EXPECT_THROW(expm_metzler(Eigen::MatrixXd::Zero(2, 3)), DomainError);
}

TEST(Expm, MetzlerWithPositiveDiagonal) {
  Eigen::MatrixXd a(1, 1);
  a << 2.0;
  EXPECT_NEAR(expm_metzler(a)(0, 0), std::exp(2.0), 1e-13 * std::exp(2.0));
}
