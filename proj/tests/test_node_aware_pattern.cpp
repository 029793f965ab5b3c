#include <gtest/gtest.h>

#include <map>
#include <set>

#include "napspmv/fixtures.hpp"
#include "napspmv/generate.hpp"
#include "napspmv/node_aware_pattern.hpp"
#include "napspmv/standard_pattern.hpp"
#include "test_util.hpp"

using namespace napspmv;
using test_support::EdgeMap;

namespace {

struct Example {
  CsrMatrix a = fixtures::example1_matrix();
  Topology topo = fixtures::example1_topology();
  Partition part = fixtures::example1_partition();
};

// T and U as listed for the worked example (U differs on node 0 from the
// ordering rule, see InjectedMapStillDeliversEverything).
const std::vector<std::vector<int>> kPublishedT{{1}, {2}, {0}, {2}, {0}, {}};
const std::vector<std::vector<int>> kPublishedU{{2}, {1}, {}, {0}, {1}, {0}};

// For every rank, every off-node column it references must reach it exactly
// once: straight from the inter-node exchange or from a local redistribution.
void expect_complete_delivery(const CsrMatrix& a, const Partition& part, const Topology& topo,
                              const NodeAwarePattern& pat) {
  for (Rank s = 0; s < topo.num_procs(); ++s) {
    std::set<Index> need;
    for (Index i : part.rows_of(s))
      for (Index j : a.row_cols(i))
        if (!topo.same_node(part.owner(j), s)) need.insert(j);
    std::multiset<Index> got;
    for (const auto& e : pat.inter.graph.recvs[static_cast<std::size_t>(s)])
      for (Index j : e.indices)
        if (need.count(j)) got.insert(j);
    for (const auto& e : pat.local_dist.graph.recvs[static_cast<std::size_t>(s)])
      for (Index j : e.indices) got.insert(j);
    EXPECT_EQ(std::set<Index>(got.begin(), got.end()), need) << "rank " << s;
    EXPECT_EQ(got.size(), need.size()) << "rank " << s;
  }
}

}  // namespace

TEST(NodePattern, FixtureNodeDestinationsAndIndices) {
  const Example ex;
  const auto np = build_node_pattern(ex.a, ex.part, ex.topo);
  EXPECT_EQ(np.destinations(0), (std::vector<int>{1, 2}));
  EXPECT_EQ(np.destinations(1), (std::vector<int>{0, 2}));
  EXPECT_EQ(np.destinations(2), (std::vector<int>{0}));
  const EdgeMap expected{{{0, 1}, {0, 1}}, {{0, 2}, {0}}, {{1, 0}, {3}}, {{1, 2}, {2}}, {{2, 0}, {4, 5}}};
  EXPECT_EQ(test_support::edges(np.graph), expected);
}

TEST(NodeProcessMap, FixtureSendSideMatchesTable) {
  const Example ex;
  const auto np = build_node_pattern(ex.a, ex.part, ex.topo);
  const auto map = assign_nodes_to_procs(np, ex.topo);
  EXPECT_EQ(map.send_map, kPublishedT);
}

TEST(NodeProcessMap, FixtureReceiveSideFollowsOrderingRule) {
  const Example ex;
  const auto map = assign_nodes_to_procs(build_node_pattern(ex.a, ex.part, ex.topo), ex.topo);
  // node 0 receives 2 values from node 2 and 1 from node 1: largest to the
  // last local process
  const std::vector<std::vector<int>> rule{{1}, {2}, {}, {0}, {1}, {0}};
  EXPECT_EQ(map.recv_map, rule);
  EXPECT_NE(map.recv_map, kPublishedU);
}

TEST(InterProcPattern, FixtureWithDefaultMap) {
  const Example ex;
  const auto pat = build_node_aware_pattern(ex.a, ex.part, ex.topo);
  const EdgeMap expected{{{0, 3}, {0, 1}}, {{1, 5}, {0}}, {{2, 0}, {3}}, {{3, 4}, {2}}, {{4, 1}, {4, 5}}};
  EXPECT_EQ(test_support::edges(pat.inter.graph), expected);
  expect_complete_delivery(ex.a, ex.part, ex.topo, pat);
}

TEST(InterProcPattern, FixtureWithPublishedMapDestinations) {
  const Example ex;
  auto np = build_node_pattern(ex.a, ex.part, ex.topo);
  auto map = make_node_process_map(np, ex.topo, kPublishedT, kPublishedU);
  const auto pat = build_node_aware_pattern(ex.a, ex.part, ex.topo, np, map);
  // (0,0)->(1,1), (1,0)->(1,2), (0,1)->(1,0), (1,1)->(0,2), (0,2)->(0,0)
  EXPECT_EQ(pat.inter.destinations(0), (std::vector<Rank>{3}));
  EXPECT_EQ(pat.inter.destinations(1), (std::vector<Rank>{5}));
  EXPECT_EQ(pat.inter.destinations(2), (std::vector<Rank>{1}));
  EXPECT_EQ(pat.inter.destinations(3), (std::vector<Rank>{4}));
  EXPECT_EQ(pat.inter.destinations(4), (std::vector<Rank>{0}));
  EXPECT_TRUE(pat.inter.destinations(5).empty());
}

TEST(InterProcPattern, InjectedMapStillDeliversEverything) {
  const Example ex;
  auto np = build_node_pattern(ex.a, ex.part, ex.topo);
  auto map = make_node_process_map(np, ex.topo, kPublishedT, kPublishedU);
  const auto pat = build_node_aware_pattern(ex.a, ex.part, ex.topo, np, map);
  // the whole E(n, m) goes to the single assigned sender
  const EdgeMap expected{{{0, 3}, {0, 1}}, {{1, 5}, {0}}, {{2, 1}, {3}}, {{3, 4}, {2}}, {{4, 0}, {4, 5}}};
  EXPECT_EQ(test_support::edges(pat.inter.graph), expected);
  expect_complete_delivery(ex.a, ex.part, ex.topo, pat);
}

TEST(LocalPattern, FixtureWithDefaultMap) {
  const Example ex;
  const auto pat = build_node_aware_pattern(ex.a, ex.part, ex.topo);
  EXPECT_EQ(test_support::edges(pat.local_initial.graph),
            (EdgeMap{{{0, 1}, {0}}, {{1, 0}, {1}}, {{2, 3}, {2}}, {{3, 2}, {3}}, {{5, 4}, {5}}}));
  EXPECT_EQ(test_support::edges(pat.local_dist.graph), (EdgeMap{{{1, 0}, {5}}, {{5, 4}, {0}}}));
  EXPECT_EQ(test_support::edges(pat.fully_local.graph), (EdgeMap{{{1, 0}, {1}}, {{2, 3}, {2}}, {{3, 2}, {3}}}));
  EXPECT_EQ(pat.local_initial.locality, Locality::on_node_to_off_node);
  EXPECT_EQ(phase_of(pat.local_dist.locality), Phase::local_dist);
}

TEST(NodeAwareStats, FixtureCounts) {
  const Example ex;
  const auto pat = build_node_aware_pattern(ex.a, ex.part, ex.topo);
  const auto s = summarize(nap_message_stats(pat, ex.topo), ex.topo);
  EXPECT_EQ(s.phase(Phase::inter_node, MessageClass::inter).messages, 5);
  EXPECT_EQ(s.phase(Phase::inter_node, MessageClass::inter).bytes, 7 * kBytesPerValue);
  EXPECT_EQ(s.phase(Phase::fully_local, MessageClass::intra).messages, 3);
  EXPECT_EQ(s.phase(Phase::local_initial, MessageClass::intra).messages, 5);
  EXPECT_EQ(s.phase(Phase::local_dist, MessageClass::intra).messages, 2);
  EXPECT_EQ(s.totals(MessageClass::inter).messages, 5);
  EXPECT_EQ(s.rank_max(MessageClass::inter).messages, 1);
}

TEST(NodeProcessMap, RejectsInvalidInjectedTables) {
  const Example ex;
  const auto np = build_node_pattern(ex.a, ex.part, ex.topo);
  auto t = kPublishedT;
  t[1] = {};  // node pair 0->2 left without a sender
  EXPECT_THROW(make_node_process_map(np, ex.topo, t, kPublishedU), std::invalid_argument);
  t = kPublishedT;
  t[5] = {1};  // node 2 sends nothing to node 1
  EXPECT_THROW(make_node_process_map(np, ex.topo, t, kPublishedU), std::invalid_argument);
  auto u = kPublishedU;
  u[2] = {0};  // second receiver for 0->1
  EXPECT_THROW(make_node_process_map(np, ex.topo, kPublishedT, u), std::invalid_argument);
  EXPECT_THROW(make_node_process_map(np, ex.topo, {{}}, kPublishedU), std::invalid_argument);
}

struct RandomCase {
  Index n;
  Index nnz;
  int nodes;
  int ppn;
  bool strided;
  std::uint64_t seed;
};

class NodeAwareRandom : public ::testing::TestWithParam<RandomCase> {};

TEST_P(NodeAwareRandom, DedupBalanceAndDelivery) {
  const auto c = GetParam();
  const auto a = generate_random(c.n, c.nnz, c.seed);
  const Topology topo(c.nodes, c.ppn);
  const auto part = c.strided ? partition_strided(c.n, topo) : partition_contiguous(c.n, topo);
  const auto pat = build_node_aware_pattern(a, part, topo);
  const auto std_pat = build_standard_pattern(a, part, topo);

  // one message per ordered node pair, carrying E(n, m) with no duplicates
  std::map<std::pair<int, int>, std::set<Index>> crossing;
  std::map<std::pair<int, int>, int> pair_msgs;
  for (Rank p = 0; p < topo.num_procs(); ++p) {
    for (const auto& e : pat.inter.graph.sends[static_cast<std::size_t>(p)]) {
      const auto key = std::make_pair(topo.node_of(p), topo.node_of(e.peer));
      ++pair_msgs[key];
      for (Index j : e.indices) EXPECT_TRUE(crossing[key].insert(j).second);
    }
  }
  Index nap_volume = 0;
  for (int n = 0; n < topo.num_nodes(); ++n) {
    for (int m : pat.nodes.destinations(n)) {
      const auto e = pat.nodes.indices(n, m);
      EXPECT_EQ(crossing[std::make_pair(n, m)], std::set<Index>(e.begin(), e.end()));
      EXPECT_EQ(pair_msgs[std::make_pair(n, m)], 1);
      nap_volume += static_cast<Index>(e.size());
    }
  }
  EXPECT_EQ(nap_volume, pat.inter.graph.value_count());

  Index std_inter_volume = 0;
  for (Rank r = 0; r < topo.num_procs(); ++r)
    for (const auto& e : std_pat.graph.sends[static_cast<std::size_t>(r)])
      if (!topo.same_node(r, e.peer)) std_inter_volume += static_cast<Index>(e.indices.size());
  EXPECT_LE(nap_volume, std_inter_volume);

  // round-robin balance
  for (int n = 0; n < topo.num_nodes(); ++n) {
    const auto dests = static_cast<int>(pat.nodes.destinations(n).size());
    for (int p = 0; p < topo.ppn(); ++p) {
      const Rank r = topo.tuple_to_rank({p, n});
      const auto t = static_cast<int>(pat.map.send_map[static_cast<std::size_t>(r)].size());
      EXPECT_GE(t, dests / topo.ppn());
      EXPECT_LE(t, (dests + topo.ppn() - 1) / topo.ppn());
    }
  }

  for (const auto* lp : {&pat.local_initial, &pat.local_dist, &pat.fully_local})
    for (Rank p = 0; p < topo.num_procs(); ++p)
      for (const auto& e : lp->graph.sends[static_cast<std::size_t>(p)]) EXPECT_TRUE(topo.same_node(p, e.peer));

  expect_complete_delivery(a, part, topo, pat);
}

INSTANTIATE_TEST_SUITE_P(Shapes, NodeAwareRandom,
                         ::testing::Values(RandomCase{400, 5, 4, 2, false, 1}, RandomCase{400, 25, 2, 4, true, 2},
                                           RandomCase{1000, 50, 4, 4, false, 3}, RandomCase{600, 10, 3, 8, true, 4},
                                           RandomCase{256, 100, 8, 2, false, 5}, RandomCase{300, 20, 1, 6, false, 6}));

TEST(NodeAware, OneProcessPerNodeMatchesStandardPattern) {
  const auto a = generate_random(500, 20, 9);
  const Topology topo(6, 1);
  for (const auto& part : {partition_contiguous(500, topo), partition_strided(500, topo)}) {
    const auto pat = build_node_aware_pattern(a, part, topo);
    const auto std_pat = build_standard_pattern(a, part, topo);
    EXPECT_EQ(test_support::edges(pat.inter.graph), test_support::edges(std_pat.graph));
    EXPECT_EQ(pat.local_initial.graph.message_count(), 0);
    EXPECT_EQ(pat.local_dist.graph.message_count(), 0);
    EXPECT_EQ(pat.fully_local.graph.message_count(), 0);
  }
}

TEST(NodeAware, SingleNodeIsFullyLocal) {
  const auto a = generate_random(200, 15, 2);
  const Topology topo(1, 4);
  const auto part = partition_contiguous(200, topo);
  const auto pat = build_node_aware_pattern(a, part, topo);
  EXPECT_EQ(pat.inter.graph.message_count(), 0);
  EXPECT_EQ(test_support::edges(pat.fully_local.graph),
            test_support::edges(build_standard_pattern(a, part, topo).graph));
}

TEST(NodeAware, SplitOptionSpreadsShortListsAcrossProcesses) {
  // two nodes of four: every rank of node 1 needs columns owned on node 0
  const Index n = 64;
  std::vector<Triplet> entries;
  for (Index i = 0; i < n; ++i) entries.push_back({i, i, 1.0});
  for (Index i = 32; i < n; ++i)
    for (Index j = 0; j < 10; ++j) entries.push_back({i, j * 3, 1.0});
  const auto a = from_triplets(n, n, entries);
  const Topology topo(2, 4);
  const auto part = partition_contiguous(n, topo);

  const auto plain = build_node_aware_pattern(a, part, topo);
  EXPECT_EQ(plain.inter.graph.message_count(), 1);

  const auto split = build_node_aware_pattern(a, part, topo, AssignOptions{true});
  EXPECT_EQ(split.inter.graph.message_count(), 4);
  EXPECT_EQ(split.inter.graph.value_count(), 10);
  for (Rank p = 0; p < 4; ++p) {
    const auto& chunks = split.map.send_chunks[static_cast<std::size_t>(p)];
    ASSERT_EQ(chunks.size(), 1u);
    const Index len = chunks[0].end - chunks[0].begin;
    EXPECT_TRUE(len == 2 || len == 3);
  }
  expect_complete_delivery(a, part, topo, split);
}

TEST(NodeAware, SplitCountsFavourLargestPayload) {
  const std::vector<detail::Candidate> c{{1, 9}, {2, 3}};
  EXPECT_EQ(detail::split_counts(c, 4), (std::vector<Index>{3, 1}));
  const std::vector<detail::Candidate> tiny{{1, 1}};
  EXPECT_EQ(detail::split_counts(tiny, 8), (std::vector<Index>{1}));
}

TEST(NodeAware, DiagonalMatrixHasEmptySections) {
  std::vector<Triplet> diag;
  for (Index i = 0; i < 12; ++i) diag.push_back({i, i, 2.0});
  const Topology topo(3, 2);
  const auto pat = build_node_aware_pattern(from_triplets(12, 12, diag), partition_contiguous(12, topo), topo);
  EXPECT_EQ(pat.nodes.graph.message_count(), 0);
  EXPECT_EQ(pat.inter.graph.message_count(), 0);
  EXPECT_EQ(pat.local_initial.graph.message_count() + pat.local_dist.graph.message_count() +
                pat.fully_local.graph.message_count(),
            0);
}
