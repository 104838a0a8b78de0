#include <gtest/gtest.h>

#include <algorithm>
#include <limits>

#include "sdss/pretext.hpp"
#include "test_util.hpp"

using namespace sdss;
using sdss::testing::random_graph;
using sdss::testing::random_matrix;

namespace {

// Smallest cut over all 2-partitions whose larger side holds at most `cap`
// nodes.
Index exhaustive_two_way_cut(const Graph& g, Index cap) {
  const Index n = g.num_nodes();
  Index best = std::numeric_limits<Index>::max();
  for (std::uint32_t mask = 0; mask < (1u << n); ++mask) {
    const Index ones = __builtin_popcount(mask);
    if (ones > cap || n - ones > cap) continue;
    Index cut = 0;
    for (const auto& [u, v] : g.edges()) cut += ((mask >> u) & 1u) != ((mask >> v) & 1u);
    best = std::min(best, cut);
  }
  return best;
}

Graph path(Index n) {
  std::vector<Edge> edges;
  for (Index i = 0; i + 1 < n; ++i) edges.emplace_back(i, i + 1);
  return Graph(n, edges);
}

}  // namespace

TEST(Partition, PathOfSixMatchesExhaustiveOracle) {
  const Graph g = path(6);
  const Index oracle = exhaustive_two_way_cut(g, 3);
  ASSERT_EQ(oracle, 1);
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const PartitionResult r = balanced_partition(g, 2, 0.1, seed);
    EXPECT_EQ(r.cut, oracle) << "seed " << seed;
    EXPECT_EQ(edge_cut(g, r.part), r.cut);
  }
}

TEST(Partition, NeverBeatsExhaustiveOptimum) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const Graph g = random_graph(10, 0.35, seed);
    const PartitionResult r = balanced_partition(g, 2, 0.2, seed);
    EXPECT_GE(r.cut, exhaustive_two_way_cut(g, 6));
    EXPECT_EQ(edge_cut(g, r.part), r.cut);
  }
}

TEST(Partition, CutTraceStrictlyDecreasesAfterGrowth) {
  const Graph g = random_graph(120, 0.05, 3);
  const PartitionResult r = balanced_partition(g, 4, 0.1, 3);
  ASSERT_FALSE(r.cut_trace.empty());
  for (size_t i = 1; i < r.cut_trace.size(); ++i) EXPECT_LT(r.cut_trace[i], r.cut_trace[i - 1]);
  EXPECT_EQ(r.cut_trace.back(), r.cut);
}

TEST(Partition, BalanceHoldsAcrossRandomGraphs) {
  std::mt19937_64 rng(17);
  Index feasible = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const Index k = 2 + static_cast<Index>(rng() % 7);
    const Index n = k + static_cast<Index>(rng() % (201 - k));
    const Graph g = random_graph(n, 3.0 / static_cast<double>(n), rng());
    PartitionResult r;
    try {
      r = balanced_partition(g, k, 0.1, rng());
    } catch (const std::invalid_argument&) {
      // Only when no partition can meet the bound: K * ceil(n / K) / n > 1.1.
      const Index smallest_max = (n + k - 1) / k;
      EXPECT_GT(static_cast<double>(k * smallest_max) / static_cast<double>(n), 1.1);
      continue;
    }
    ++feasible;
    EXPECT_LE(partition_imbalance(r.part, k), 1.1 + 1e-12) << "n=" << n << " k=" << k;
    for (Index p : r.part) EXPECT_TRUE(p >= 0 && p < k);
  }
  EXPECT_GT(feasible, 150);
}

TEST(Partition, DisconnectedGraphStillCovered) {
  const Graph g(10, {});
  const PartitionResult r = balanced_partition(g, 5, 0.1, 1);
  EXPECT_LE(partition_imbalance(r.part, 5), 1.1);
  EXPECT_EQ(r.cut, 0);
}

TEST(Partition, RejectsBadArguments) {
  const Graph g = path(4);
  EXPECT_THROW(balanced_partition(g, 5, 0.1, 0), std::invalid_argument);
  EXPECT_THROW(balanced_partition(g, 2, 0.0, 0), std::invalid_argument);
  EXPECT_THROW(balanced_partition(Graph(9, {}), 8, 0.1, 0), std::invalid_argument);
}

TEST(Pretext, DegreeTargetsAreNodeDegrees) {
  const Graph g = random_graph(20, 0.2, 5);
  const PretextTask t = make_degree_task(g);
  EXPECT_EQ(t.type, TaskType::Regression);
  ASSERT_EQ(t.regression_targets.rows(), 20);
  for (Index v = 0; v < 20; ++v) {
    EXPECT_EQ(t.regression_targets(v, 0), static_cast<double>(g.neighbors(v).size()));
  }
}

TEST(Pretext, ClusteringTargetsSeededAndInRange) {
  const Matrix X = random_matrix(40, 3, 2);
  const PretextTask a = make_clustering_task(X, 4, 9);
  const PretextTask b = make_clustering_task(X, 4, 9);
  EXPECT_EQ(a.class_targets, b.class_targets);
  EXPECT_EQ(a.output_dim, 4);
  for (Index c : a.class_targets) EXPECT_TRUE(c >= 0 && c < 4);
  EXPECT_FALSE(a.input_override.has_value());
}

TEST(Pretext, CompletionMasksRowsAndKeepsOthers) {
  const Matrix X = random_matrix(30, 6, 4);
  const PretextTask t = make_completion_task(X, 0.2, 3, 8);
  EXPECT_EQ(t.mask.size(), 6u);
  EXPECT_TRUE(std::is_sorted(t.mask.begin(), t.mask.end()));
  ASSERT_TRUE(t.input_override.has_value());
  for (Index v = 0; v < 30; ++v) {
    const bool masked = std::binary_search(t.mask.begin(), t.mask.end(), v);
    if (masked) EXPECT_EQ(t.input_override->row(v).cwiseAbs().sum(), 0.0);
    else EXPECT_EQ(t.input_override->row(v), X.row(v));
  }
  EXPECT_EQ(t.regression_targets.rows(), 30);
  EXPECT_EQ(t.regression_targets.cols(), 3);
  EXPECT_EQ(t.output_dim, 3);
}

TEST(Pretext, CompletionRejectsEmptyMask) {
  const Matrix X = random_matrix(4, 2, 1);
  EXPECT_THROW(make_completion_task(X, 0.05, 2, 0), std::invalid_argument);
}

TEST(Pretext, KindNamesRoundTrip) {
  for (auto k : {PretextKind::Degree, PretextKind::Clustering, PretextKind::Partitioning,
                 PretextKind::Completion}) {
    EXPECT_EQ(parse_pretext_kind(to_string(k)), k);
  }
  EXPECT_THROW(parse_pretext_kind("rotation"), ConfigError);
}
