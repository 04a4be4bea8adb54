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

#ifndef ETR_GRAPH_H_
#define ETR_GRAPH_H_

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include <Eigen/SparseCore>

#include "etr/request.h"
#include "etr/types.h"

namespace etr {

// Undirected, unweighted node-classification graph. Immutable after
// construction; the constructor enforces every structural invariant:
//   * adjacency is symmetric, duplicate-free and has no self-loops,
//   * features has exactly num_nodes rows and at least one column,
//   * every label lies in [0, num_classes),
//   * each node is either a training node or a test node.
class GraphBundle {
 public:
  // `edges` may be given in either orientation; each undirected edge must
  // appear once.
  GraphBundle(int num_nodes, std::vector<Edge> edges, Matrix features,
              std::vector<int> labels, std::vector<bool> train_mask,
              int num_classes, std::string name = {});

  int num_nodes() const { return num_nodes_; }
  std::size_t num_edges() const { return edges_.size(); }
  int feature_dim() const { return static_cast<int>(features_.cols()); }
  int num_classes() const { return num_classes_; }
  const std::string& name() const { return name_; }

  // Canonical edge list, u < v, sorted.
  const std::vector<Edge>& edges() const { return edges_; }
  bool has_edge(NodeId u, NodeId v) const;
  std::span<const NodeId> neighbors(NodeId node) const;
  int degree(NodeId node) const;

  const Matrix& features() const { return features_; }
  const std::vector<int>& labels() const { return labels_; }
  const std::vector<bool>& train_mask() const { return train_mask_; }
  std::vector<bool> test_mask() const;
  bool is_train(NodeId node) const { return train_mask_[node]; }

  const NodeSet& train_nodes() const { return train_nodes_; }
  const NodeSet& test_nodes() const { return test_nodes_; }

  void check_node(NodeId node) const;

  friend bool operator==(const GraphBundle& a, const GraphBundle& b);

 private:
  int num_nodes_;
  int num_classes_;
  std::string name_;
  std::vector<Edge> edges_;
  std::vector<std::size_t> offsets_;  // CSR row pointers, size n + 1
  std::vector<NodeId> adjacency_;     // CSR column indices, sorted per row
  Matrix features_;
  std::vector<int> labels_;
  std::vector<bool> train_mask_;
  NodeSet train_nodes_;
  NodeSet test_nodes_;
};

using SparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor, int>;

// Symmetric-normalized adjacency with self-loops. Row i holds nonzeros at i
// and at each neighbor of i.
struct PropagationMatrix {
  SparseMatrix matrix;

  int size() const { return static_cast<int>(matrix.rows()); }
  // P[i][j]; zero when j is neither i nor a neighbor of i.
  double at(NodeId i, NodeId j) const { return matrix.coeff(i, j); }
};

// D^{-1/2} (A + I) D^{-1/2}, D the degree matrix of A + I. The (i, j) and
// (j, i) entries are bitwise equal.
PropagationMatrix build_propagation(const GraphBundle& graph);

// Nodes at shortest-path distance 1..k from any seed, seeds excluded.
NodeSet k_hop_neighborhood(const GraphBundle& graph, const NodeSet& seeds,
                           int k);

// Graph after applying a request, plus the old-to-new node id mapping
// (identity for edge and feature requests, -1 for removed nodes).
struct RemovalResult {
  GraphBundle graph;
  std::vector<NodeId> old_to_new;

  NodeSet map(const NodeSet& old_ids) const;
};

// Node request: drops the nodes, their incident edges and feature rows and
// renumbers survivors densely in their original order. Edge request: drops
// the listed edges. Feature request: zeroes the listed feature rows.
RemovalResult remove_request(const GraphBundle& graph,
                             const UnlearnRequest& request);

// Training-node subsets involved in one request. For node requests d_i is
// empty; for edge/feature requests d_f and d_k are empty and d_r is the
// whole training set.
struct NodeSubsets {
  NodeSet d_f;
  NodeSet d_k;
  NodeSet d_r;
  NodeSet d_i;
  int k = 2;
};

// Node task: d_f = request ∩ train, d_k = k-hop(d_f) ∩ train.
// Edge task: d_i = (endpoints ∪ (k-1)-hop(endpoints)) ∩ train.
// Feature task: d_i = (nodes ∪ k-hop(nodes)) ∩ train.
// Hops are measured on the graph before removal.
NodeSubsets affected_subgraph(const GraphBundle& graph,
                              const UnlearnRequest& request, int k);

// Throws InputError when ids are out of range, an edge does not exist, or a
// node request names a test node.
void validate_request(const GraphBundle& graph, const UnlearnRequest& request);

}  // namespace etr

#endif  // ETR_GRAPH_H_
