#include "leadsel/errors.hpp"
#include "leadsel/graph.hpp"

#include "oracles.hpp"
#include "support.hpp"

#include <gtest/gtest.h>

#include <set>

using namespace leadsel;

namespace {

Topology two_node(double w12, double w21) { return Topology(2, {{0, 1, w12}, {1, 0, w21}}); }

Topology path(std::size_t n, double w = 1.0) {
  std::vector<Edge> edges;
  for (NodeId i = 0; i + 1 < n; ++i) {
    edges.push_back({i, i + 1, w});
    edges.push_back({i + 1, i, w});
  }
  return Topology(n, std::move(edges));
}

}  // namespace

TEST(Topology, RejectsBadEdges) {
  EXPECT_THROW(Topology(2, {{0, 0, 1.0}}), DomainError);
  EXPECT_THROW(Topology(2, {{0, 2, 1.0}}), DomainError);
  EXPECT_THROW(Topology(2, {{0, 1, -1.0}}), DomainError);
  EXPECT_THROW(Topology(2, {{0, 1, 1.0}, {0, 1, 2.0}}), DomainError);
}

TEST(Topology, ZeroWeightEdgeIsStillAnEdge) {
  const Topology t(2, {{0, 1, 0.0}, {1, 0, 1.0}});
  EXPECT_TRUE(t.has_edge(0, 1));
  EXPECT_EQ(t.out_degree(0), 1u);
  EXPECT_DOUBLE_EQ(t.weight(0, 1), 0.0);
  EXPECT_DOUBLE_EQ(t.min_positive_weight(), 1.0);
}

TEST(Laplacian, TwoNodeFollowerRow) {
  const Eigen::MatrixXd l = build_laplacian(two_node(2.0, 3.0), LeaderSet{1});
  Eigen::MatrixXd expected(2, 2);
  expected << 2.0, -2.0, 0.0, 0.0;
  EXPECT_EQ(l, expected);
}

TEST(Laplacian, AllLeadersIsZero) {
  const Topology t = path(4);
  EXPECT_TRUE(build_laplacian(t, LeaderSet::all(4)).isZero());
}

TEST(Laplacian, NoLeadersIsPlainLaplacian) {
  const Eigen::MatrixXd l = build_laplacian(path(3, 0.5), LeaderSet{});
  Eigen::MatrixXd expected(3, 3);
  expected << 0.5, -0.5, 0.0, -0.5, 1.0, -0.5, 0.0, -0.5, 0.5;
  EXPECT_EQ(l, expected);
}

TEST(Laplacian, RejectsOutOfRangeLeader) {
  EXPECT_THROW(build_laplacian(path(3), LeaderSet{3}), DomainError);
}

TEST(Laplacian, StructureOnRandomInstances) {
  Rng rng(11);
  for (int inst = 0; inst < 200; ++inst) {
    const std::size_t n = testing_support::uniform_size(1, 10, rng);
    const Topology t = testing_support::random_topology(n, 0.5, rng);
    const LeaderSet s = testing_support::random_subset(n, testing_support::uniform_size(0, n, rng), rng);
    const Eigen::MatrixXd l = build_laplacian(t, s);
    EXPECT_TRUE(l.isApprox(oracle::laplacian(t, s)) || l.isZero());
    for (Eigen::Index i = 0; i < l.rows(); ++i) {
      EXPECT_NEAR(l.row(i).sum(), 0.0, 1e-12);
      for (Eigen::Index j = 0; j < l.cols(); ++j) {
        if (i != j) {
          EXPECT_LE(l(i, j), 0.0);
        }
      }
      if (s.contains(static_cast<NodeId>(i))) {
        EXPECT_TRUE(l.row(i).isZero());
      }
    }
  }
}

TEST(Laplacian, FollowerBlockMatchesSubmatrix) {
  Rng rng(12);
  const Topology t = testing_support::random_topology(7, 0.6, rng);
  const LeaderSet s{1, 4};
  const auto followers = s.complement(7);
  const Eigen::MatrixXd full = build_laplacian(t, s);
  const Eigen::MatrixXd block = follower_laplacian(t, followers);
  for (std::size_t a = 0; a < followers.size(); ++a) {
    for (std::size_t b = 0; b < followers.size(); ++b) {
      EXPECT_DOUBLE_EQ(block(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)),
                       full(static_cast<Eigen::Index>(followers[a]), static_cast<Eigen::Index>(followers[b])));
    }
  }
}

TEST(Connectivity, TwoNodeCases) {
  EXPECT_TRUE(is_strongly_connected(two_node(1.0, 1.0)));
  EXPECT_FALSE(is_strongly_connected(Topology(2, {{0, 1, 1.0}})));
  EXPECT_FALSE(is_strongly_connected(Topology(2, {})));
}

TEST(Connectivity, MatchesBreadthFirstOracle) {
  Rng rng(13);
  GeometricParams gp;
  const Topology geo = gen_geometric(gp, rng);
  EXPECT_TRUE(oracle::strongly_connected(geo));
  for (int inst = 0; inst < 100; ++inst) {
    const Topology t = testing_support::random_topology(8, 0.2, rng);
    EXPECT_EQ(is_strongly_connected(t), oracle::strongly_connected(t));
    EXPECT_EQ(t.strongly_connected(), oracle::strongly_connected(t));
  }
}

TEST(Connectivity, CanReachLeaders) {
  const Topology t(3, {{0, 1, 1.0}, {1, 0, 1.0}});  // node 2 is isolated
  const auto reach = can_reach(t, LeaderSet{0});
  EXPECT_TRUE(reach[0]);
  EXPECT_TRUE(reach[1]);
  EXPECT_FALSE(reach[2]);
}

TEST(LeaderSetTest, SortsAndRejectsDuplicates) {
  const LeaderSet s{4, 1, 3};
  EXPECT_EQ(s.nodes(), (std::vector<NodeId>{1, 3, 4}));
  EXPECT_THROW(LeaderSet({1, 1}), DomainError);
  EXPECT_EQ(s.with(2).size(), 4u);
  EXPECT_EQ(s.with(3), s);
  EXPECT_EQ(s.complement(5), (std::vector<NodeId>{0, 2}));
}

TEST(LeaderConfigTest, AnchorsMustMatchLeaders) {
  EXPECT_THROW(LeaderConfig(LeaderSet{0, 1}, {{0, 1.0}}), DomainError);
  EXPECT_THROW(LeaderConfig(LeaderSet{0}, {{0, 1.0}, {2, 1.0}}), DomainError);
  const LeaderConfig c(LeaderSet{0, 2}, {{0, -1.0}, {2, 3.0}});
  EXPECT_EQ(c.hull(), std::make_pair(-1.0, 3.0));
  EXPECT_THROW(LeaderConfig::uniform(LeaderSet{}, 0.0).hull(), DomainError);
}

TEST(EpochSequenceTest, Validation) {
  const Topology a = path(3);
  EXPECT_THROW(EpochSequence({}, 1.0), DomainError);
  EXPECT_THROW(EpochSequence({{a, 0.5}}, 1.0), DomainError);
  EXPECT_THROW(EpochSequence({{a, 1.0}, {path(4), 1.0}}, 1.0), DomainError);
  EXPECT_THROW(EpochSequence({{a, 1.0}}, 0.0), DomainError);
  const EpochSequence seq({{a, 1.0}, {a, 2.5}}, 1.0);
  EXPECT_DOUBLE_EQ(seq.total_time(), 3.5);
  EXPECT_EQ(seq.nodes(), 3u);
}

TEST(Geometric, SmallAreaGivesBothLinks) {
  Rng rng(14);
  GeometricParams gp;
  gp.n = 2;
  gp.area_side = 10.0;
  const Topology t = gen_geometric(gp, rng);
  EXPECT_TRUE(t.has_edge(0, 1));
  EXPECT_TRUE(t.has_edge(1, 0));
}

TEST(Geometric, DeterministicForSeed) {
  GeometricParams gp;
  gp.n = 30;
  Rng a(99);
  Rng b(99);
  EXPECT_EQ(gen_geometric(gp, a), gen_geometric(gp, b));
}

TEST(Geometric, ImpossibleAndTooSmall) {
  Rng rng(15);
  GeometricParams gp;
  gp.n = 3;
  gp.comm_range = 0.0;
  EXPECT_THROW(gen_geometric(gp, rng), GenerationError);
  gp.n = 1;
  gp.comm_range = 300.0;
  EXPECT_THROW(gen_geometric(gp, rng), DomainError);
}

TEST(Geometric, SymmetricAdjacencyAndWeights) {
  Rng rng(16);
  GeometricParams gp;
  gp.n = 40;
  gp.symmetric_weights = true;
  const Topology t = gen_geometric(gp, rng);
  for (const auto& e : t.edges()) {
    ASSERT_TRUE(t.has_edge(e.to, e.from));
    EXPECT_EQ(t.weight(e.to, e.from), e.weight);
  }
  gp.symmetric_weights = false;
  const Topology u = gen_geometric(gp, rng);
  for (const auto& e : u.edges()) EXPECT_TRUE(u.has_edge(e.to, e.from));
}

TEST(LinkFailures, ZeroProbabilityKeepsBase) {
  Rng rng(17);
  GeometricParams gp;
  gp.n = 30;
  const Topology base = gen_geometric(gp, rng);
  const EpochSequence seq = gen_link_failures(base, 0.0, 8, 1.0, rng);
  ASSERT_EQ(seq.size(), 8u);
  for (const auto& e : seq.epochs()) EXPECT_EQ(e.topology, base);
  EXPECT_EQ(gen_link_failures(base, 0.1, 1, 1.0, rng).size(), 1u);
  EXPECT_THROW(gen_link_failures(base, 0.1, 0, 1.0, rng), DomainError);
  EXPECT_THROW(fail_links(base, 1.0, rng), DomainError);
}

TEST(LinkFailures, SurvivingFraction) {
  Rng rng(18);
  GeometricParams gp;
  gp.n = 100;
  const Topology base = gen_geometric(gp, rng);
  const std::size_t links = base.edge_count() / 2;
  std::size_t kept = 0;
  const int draws = 50;
  for (int d = 0; d < draws; ++d) kept += fail_links(base, 0.15, rng).edge_count() / 2;
  const double total = static_cast<double>(links) * draws;
  const double frac = static_cast<double>(kept) / total;
  const double se = std::sqrt(0.85 * 0.15 / total);
  EXPECT_NEAR(frac, 0.85, 3.0 * se);
}

TEST(Waypoint, FrozenModelRepeatsTopology) {
  Rng rng(19);
  WaypointParams wp;
  wp.n = 30;
  wp.ref_speed = 0.0;
  wp.disturbance = {0.0, 0.0};
  const EpochSequence seq = gen_waypoint(wp, 5, 1.0, rng);
  for (const auto& e : seq.epochs()) EXPECT_EQ(e.topology, seq[0].topology);
}

TEST(Waypoint, LargeRangeIsComplete) {
  Rng rng(20);
  WaypointParams wp;
  wp.n = 2;
  wp.comm_range = 2000.0;
  const EpochSequence seq = gen_waypoint(wp, 3, 1.0, rng);
  for (const auto& e : seq.epochs()) EXPECT_EQ(e.topology.edge_count(), 2u);
}

TEST(Waypoint, ConsecutiveEpochsPartlyOverlap) {
  double total = 0.0;
  int count = 0;
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    Rng rng(seed);
    const EpochSequence seq = gen_waypoint(WaypointParams{}, 8, 1.0, rng);
    for (std::size_t m = 1; m < seq.size(); ++m) {
      std::set<std::pair<NodeId, NodeId>> prev;
      std::set<std::pair<NodeId, NodeId>> cur;
      for (const auto& e : seq[m - 1].topology.edges()) prev.insert({e.from, e.to});
      for (const auto& e : seq[m].topology.edges()) cur.insert({e.from, e.to});
      std::size_t common = 0;
      for (const auto& e : cur) common += prev.count(e);
      const std::size_t unioned = prev.size() + cur.size() - common;
      total += static_cast<double>(common) / static_cast<double>(unioned);
      ++count;
    }
  }
  const double overlap = total / count;
  EXPECT_GT(overlap, 0.0);
  EXPECT_LT(overlap, 1.0);
}
