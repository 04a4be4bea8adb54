// Copyright 2026 The ETR Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <algorithm>
#include <cmath>
#include <random>
#include <set>

#include <gtest/gtest.h>

#include "etr/errors.h"
#include "etr/graph.h"
#include "etr/sbm.h"
#include "oracles.h"

namespace etr {
namespace {

GraphBundle make_graph(int n, std::vector<Edge> edges,
                       std::vector<bool> train = {}) {
  if (train.empty()) train.assign(n, true);
  std::vector<int> labels(n);
  for (int i = 0; i < n; ++i) labels[i] = i % 2;
  return GraphBundle(n, std::move(edges), Matrix::Ones(n, 2), labels, train,
                     2);
}

GraphBundle path(int n) {
  std::vector<Edge> edges;
  for (int i = 0; i + 1 < n; ++i) edges.push_back({i, i + 1});
  return make_graph(n, edges);
}

TEST(GraphBundleTest, RejectsSelfLoop) {
  EXPECT_THROW(make_graph(3, {{1, 1}}), InputError);
}

TEST(GraphBundleTest, RejectsDuplicateInEitherOrientation) {
  EXPECT_THROW(make_graph(3, {{0, 1}, {1, 0}}), InputError);
}

TEST(GraphBundleTest, RejectsBadLabelsAndShapes) {
  EXPECT_THROW(GraphBundle(2, {}, Matrix::Ones(2, 1), {0, 2}, {true, true}, 2),
               InputError);
  EXPECT_THROW(GraphBundle(2, {}, Matrix::Ones(3, 1), {0, 1}, {true, true}, 2),
               InputError);
  EXPECT_THROW(GraphBundle(2, {}, Matrix::Ones(2, 0), {0, 1}, {true, true}, 2),
               InputError);
  EXPECT_THROW(make_graph(2, {{0, 5}}), InputError);
}

TEST(GraphBundleTest, AdjacencyIsSymmetricAndSplitsPartition) {
  std::mt19937_64 rng(7);
  GraphBundle g = testing::random_graph(rng, 30, 3, 3, 0.2);
  for (int u = 0; u < g.num_nodes(); ++u) {
    for (NodeId v : g.neighbors(u)) {
      EXPECT_NE(u, v);
      EXPECT_TRUE(g.has_edge(v, u));
    }
  }
  NodeSet all = set_union(g.train_nodes(), g.test_nodes());
  EXPECT_EQ(all.size(), static_cast<std::size_t>(g.num_nodes()));
  EXPECT_TRUE(set_intersection(g.train_nodes(), g.test_nodes()).empty());
}

TEST(PropagationTest, TwoNodeClique) {
  PropagationMatrix p = build_propagation(make_graph(2, {{0, 1}}));
  for (int i = 0; i < 2; ++i) {
    for (int j = 0; j < 2; ++j) EXPECT_DOUBLE_EQ(p.at(i, j), 0.5);
  }
}

TEST(PropagationTest, IsolatedNode) {
  PropagationMatrix p = build_propagation(make_graph(1, {}));
  ASSERT_EQ(p.size(), 1);
  EXPECT_EQ(p.at(0, 0), 1.0);
}

TEST(PropagationTest, PathEntry) {
  PropagationMatrix p = build_propagation(path(3));
  EXPECT_NEAR(p.at(0, 1), 1.0 / std::sqrt(6.0), 1e-15);
  EXPECT_NEAR(p.at(0, 1), 0.40825, 1e-5);
  EXPECT_EQ(p.at(0, 2), 0.0);
}

TEST(PropagationTest, MatchesDenseOracleAndIsBitwiseSymmetric) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    GraphBundle g = testing::random_graph(rng, 25, 2, 2, 0.15);
    PropagationMatrix p = build_propagation(g);
    testing::Dense oracle = testing::dense_propagation(g.num_nodes(), g.edges());
    for (int i = 0; i < g.num_nodes(); ++i) {
      EXPECT_GT(p.at(i, i), 0.0);
      for (int j = 0; j < g.num_nodes(); ++j) {
        EXPECT_NEAR(p.at(i, j), oracle[i][j], 1e-15);
        EXPECT_EQ(p.at(i, j), p.at(j, i));
        EXPECT_LE(p.at(i, j), 1.0);
        EXPECT_EQ(p.at(i, j) != 0.0, i == j || g.has_edge(i, j));
      }
    }
  }
}

TEST(KHopTest, PathTwoHops) {
  EXPECT_EQ(k_hop_neighborhood(path(4), {0}, 2), (NodeSet{1, 2}));
}

TEST(KHopTest, IsolatedSeed) {
  GraphBundle g = make_graph(3, {{1, 2}});
  EXPECT_TRUE(k_hop_neighborhood(g, {0}, 2).empty());
}

TEST(KHopTest, StarCenter) {
  GraphBundle g = make_graph(5, {{0, 1}, {0, 2}, {0, 3}, {0, 4}});
  EXPECT_EQ(k_hop_neighborhood(g, {0}, 1), (NodeSet{1, 2, 3, 4}));
  EXPECT_TRUE(k_hop_neighborhood(g, {0}, 0).empty());
}

TEST(KHopTest, Errors) {
  EXPECT_THROW(k_hop_neighborhood(path(3), {7}, 1), InputError);
  EXPECT_THROW(k_hop_neighborhood(path(3), {0}, -1), InputError);
}

TEST(KHopTest, MatchesBfsOracle) {
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<int> size(1, 50);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = size(rng);
    GraphBundle g = testing::random_graph(rng, n, 1, 2, 3.0 / n);
    std::uniform_int_distribution<int> node(0, n - 1);
    NodeSet seeds{node(rng), node(rng)};
    normalize(seeds);
    const int k = trial % 4;
    std::vector<int> dist = testing::bfs_distances(
        n, g.edges(), std::vector<int>(seeds.begin(), seeds.end()));
    NodeSet expected;
    for (int v = 0; v < n; ++v) {
      if (dist[v] >= 1 && dist[v] <= k) expected.push_back(v);
    }
    EXPECT_EQ(k_hop_neighborhood(g, seeds, k), expected) << "trial " << trial;
  }
}

TEST(RemoveRequestTest, EmptyRequestKeepsGraph) {
  GraphBundle g = path(4);
  EXPECT_EQ(remove_request(g, UnlearnRequest::node({})).graph, g);
  EXPECT_EQ(remove_request(g, UnlearnRequest::edge({})).graph, g);
  EXPECT_EQ(remove_request(g, UnlearnRequest::feature({})).graph, g);
}

TEST(RemoveRequestTest, TriangleNodeRemoval) {
  GraphBundle g = make_graph(3, {{0, 1}, {0, 2}, {1, 2}});
  RemovalResult r = remove_request(g, UnlearnRequest::node({0}));
  EXPECT_EQ(r.graph.num_nodes(), 2);
  EXPECT_EQ(r.graph.num_edges(), 1u);
  EXPECT_TRUE(r.graph.has_edge(0, 1));
  EXPECT_EQ(r.old_to_new, (std::vector<NodeId>{-1, 0, 1}));
  EXPECT_EQ(r.map({0, 1, 2}), (NodeSet{0, 1}));
}

TEST(RemoveRequestTest, FeatureRowZeroed) {
  GraphBundle g = path(5);
  RemovalResult r = remove_request(g, UnlearnRequest::feature({3}));
  EXPECT_TRUE(r.graph.features().row(3).isZero(0.0));
  EXPECT_EQ(r.graph.features().row(2), g.features().row(2));
  EXPECT_EQ(r.graph.edges(), g.edges());
}

TEST(RemoveRequestTest, EdgeRemovedInBothDirections) {
  GraphBundle g = path(4);
  RemovalResult r = remove_request(g, UnlearnRequest::edge({{2, 1}}));
  EXPECT_FALSE(r.graph.has_edge(1, 2));
  EXPECT_FALSE(r.graph.has_edge(2, 1));
  EXPECT_EQ(r.graph.num_edges(), 2u);
}

TEST(RemoveRequestTest, RejectsTestNodesAndMissingEdges) {
  GraphBundle g = make_graph(3, {{0, 1}}, {true, false, true});
  EXPECT_THROW(remove_request(g, UnlearnRequest::node({1})), InputError);
  EXPECT_THROW(remove_request(g, UnlearnRequest::edge({{1, 2}})), InputError);
  EXPECT_THROW(remove_request(g, UnlearnRequest::feature({9})), InputError);
}

TEST(RemoveRequestTest, NoEdgeTouchesRemovedNodes) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    GraphBundle g = testing::random_graph(rng, 30, 2, 3, 0.15);
    NodeSet victims;
    for (NodeId v : g.train_nodes()) {
      if (rng() % 4 == 0) victims.push_back(v);
    }
    RemovalResult r = remove_request(g, UnlearnRequest::node(victims));
    EXPECT_EQ(r.graph.num_nodes(), g.num_nodes() - static_cast<int>(victims.size()));
    std::vector<NodeId> new_to_old(r.graph.num_nodes());
    for (NodeId i = 0; i < g.num_nodes(); ++i) {
      if (r.old_to_new[i] >= 0) new_to_old[r.old_to_new[i]] = i;
    }
    std::size_t kept = 0;
    for (const Edge& e : g.edges()) {
      bool gone = std::binary_search(victims.begin(), victims.end(), e.u) ||
                  std::binary_search(victims.begin(), victims.end(), e.v);
      if (!gone) ++kept;
    }
    EXPECT_EQ(r.graph.num_edges(), kept);
    for (const Edge& e : r.graph.edges()) {
      EXPECT_TRUE(g.has_edge(new_to_old[e.u], new_to_old[e.v]));
    }
  }
}

void expect_subset_invariants(const GraphBundle& g, const NodeSubsets& s,
                              bool node_task) {
  const NodeSet& train = g.train_nodes();
  EXPECT_TRUE(set_intersection(s.d_f, s.d_k).empty());
  EXPECT_EQ(set_intersection(s.d_k, s.d_r), s.d_k);
  EXPECT_EQ(set_union(s.d_f, s.d_r), train);
  EXPECT_TRUE(set_intersection(s.d_f, s.d_r).empty());
  EXPECT_EQ(set_intersection(s.d_i, train), s.d_i);
  if (node_task) {
    EXPECT_TRUE(s.d_i.empty());
  } else {
    EXPECT_TRUE(s.d_f.empty());
    EXPECT_TRUE(s.d_k.empty());
  }
}

TEST(AffectedSubgraphTest, NodeOnPath) {
  GraphBundle g = make_graph(6, {{0, 1}, {1, 2}, {2, 3}, {3, 4}, {4, 5}},
                             {true, true, false, true, true, true});
  NodeSubsets s = affected_subgraph(g, UnlearnRequest::node({3}), 2);
  EXPECT_EQ(s.d_f, (NodeSet{3}));
  EXPECT_EQ(s.d_k, (NodeSet{1, 4, 5}));  // node 2 is a test node
  EXPECT_EQ(s.d_r, (NodeSet{0, 1, 4, 5}));
  EXPECT_EQ(s.k, 2);
}

TEST(AffectedSubgraphTest, EdgeEndpointsAlwaysIncluded) {
  GraphBundle g = path(6);
  NodeSubsets s = affected_subgraph(g, UnlearnRequest::edge({{2, 3}}), 2);
  EXPECT_EQ(s.d_i, (NodeSet{1, 2, 3, 4}));
  EXPECT_EQ(s.d_r, g.train_nodes());
}

TEST(AffectedSubgraphTest, FeatureUsesKHops) {
  GraphBundle g = path(6);
  NodeSubsets s = affected_subgraph(g, UnlearnRequest::feature({0}), 2);
  EXPECT_EQ(s.d_i, (NodeSet{0, 1, 2}));
}

TEST(AffectedSubgraphTest, EmptyRequest) {
  GraphBundle g = path(5);
  for (const UnlearnRequest& r :
       {UnlearnRequest::node({}), UnlearnRequest::edge({}),
        UnlearnRequest::feature({})}) {
    NodeSubsets s = affected_subgraph(g, r, 2);
    EXPECT_TRUE(s.d_f.empty());
    EXPECT_TRUE(s.d_k.empty());
    EXPECT_TRUE(s.d_i.empty());
    EXPECT_EQ(s.d_r, g.train_nodes());
  }
}

TEST(AffectedSubgraphTest, RandomizedInvariants) {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 100; ++trial) {
    GraphBundle g = testing::random_graph(rng, 40, 2, 3, 0.08);
    NodeSet nodes;
    for (NodeId v : g.train_nodes()) {
      if (rng() % 5 == 0) nodes.push_back(v);
    }
    std::vector<Edge> edges;
    for (const Edge& e : g.edges()) {
      if (rng() % 5 == 0) edges.push_back(e);
    }
    const int k = trial % 3;
    expect_subset_invariants(
        g, affected_subgraph(g, UnlearnRequest::node(nodes), k), true);
    expect_subset_invariants(
        g, affected_subgraph(g, UnlearnRequest::edge(edges), k), false);
    expect_subset_invariants(
        g, affected_subgraph(g, UnlearnRequest::feature(nodes), k), false);
  }
}

}  // namespace
}  // namespace etr
