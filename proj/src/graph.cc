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

#include "etr/graph.h"

#include <algorithm>
#include <cmath>
#include <deque>
#include <string>

#include "etr/errors.h"

namespace etr {

namespace {

std::string edge_str(const Edge& e) {
  return "(" + std::to_string(e.u) + ", " + std::to_string(e.v) + ")";
}

}  // namespace

GraphBundle::GraphBundle(int num_nodes, std::vector<Edge> edges,
                         Matrix features, std::vector<int> labels,
                         std::vector<bool> train_mask, int num_classes,
                         std::string name)
    : num_nodes_(num_nodes),
      num_classes_(num_classes),
      name_(std::move(name)),
      edges_(std::move(edges)),
      features_(std::move(features)),
      labels_(std::move(labels)),
      train_mask_(std::move(train_mask)) {
  if (num_nodes_ <= 0) throw InputError("graph needs at least one node");
  if (num_classes_ <= 0) throw InputError("graph needs at least one class");
  if (features_.rows() != num_nodes_) {
    throw InputError("feature matrix has " + std::to_string(features_.rows()) +
                     " rows, expected " + std::to_string(num_nodes_));
  }
  if (features_.cols() == 0) throw InputError("feature dimension must be > 0");
  if (!features_.allFinite()) throw InputError("features must be finite");
  if (static_cast<int>(labels_.size()) != num_nodes_) {
    throw InputError("expected one label per node");
  }
  for (int label : labels_) {
    if (label < 0 || label >= num_classes_) {
      throw InputError("label " + std::to_string(label) + " outside [0, " +
                       std::to_string(num_classes_) + ")");
    }
  }
  if (static_cast<int>(train_mask_.size()) != num_nodes_) {
    throw InputError("expected one split flag per node");
  }

  for (Edge& e : edges_) {
    if (e.u < 0 || e.v < 0 || e.u >= num_nodes_ || e.v >= num_nodes_) {
      throw InputError("edge " + edge_str(e) + " references a missing node");
    }
    if (e.u == e.v) throw InputError("self-loop " + edge_str(e));
    e = e.canonical();
  }
  std::sort(edges_.begin(), edges_.end());
  auto dup = std::adjacent_find(edges_.begin(), edges_.end());
  if (dup != edges_.end()) throw InputError("duplicate edge " + edge_str(*dup));

  offsets_.assign(num_nodes_ + 1, 0);
  for (const Edge& e : edges_) {
    ++offsets_[e.u + 1];
    ++offsets_[e.v + 1];
  }
  for (int i = 0; i < num_nodes_; ++i) offsets_[i + 1] += offsets_[i];
  adjacency_.resize(offsets_.back());
  std::vector<std::size_t> cursor(offsets_.begin(), offsets_.end() - 1);
  for (const Edge& e : edges_) {
    adjacency_[cursor[e.u]++] = e.v;
    adjacency_[cursor[e.v]++] = e.u;
  }
  for (int i = 0; i < num_nodes_; ++i) {
    std::sort(adjacency_.begin() + offsets_[i],
              adjacency_.begin() + offsets_[i + 1]);
  }

  for (NodeId i = 0; i < num_nodes_; ++i) {
    (train_mask_[i] ? train_nodes_ : test_nodes_).push_back(i);
  }
}

bool GraphBundle::has_edge(NodeId u, NodeId v) const {
  if (u < 0 || v < 0 || u >= num_nodes_ || v >= num_nodes_) return false;
  auto row = neighbors(u);
  return std::binary_search(row.begin(), row.end(), v);
}

std::span<const NodeId> GraphBundle::neighbors(NodeId node) const {
  return {adjacency_.data() + offsets_[node],
          offsets_[node + 1] - offsets_[node]};
}

int GraphBundle::degree(NodeId node) const {
  return static_cast<int>(offsets_[node + 1] - offsets_[node]);
}

std::vector<bool> GraphBundle::test_mask() const {
  std::vector<bool> mask(train_mask_.size());
  for (std::size_t i = 0; i < mask.size(); ++i) mask[i] = !train_mask_[i];
  return mask;
}

void GraphBundle::check_node(NodeId node) const {
  if (node < 0 || node >= num_nodes_) {
    throw InputError("node id " + std::to_string(node) + " out of range [0, " +
                     std::to_string(num_nodes_) + ")");
  }
}

bool operator==(const GraphBundle& a, const GraphBundle& b) {
  return a.num_nodes_ == b.num_nodes_ && a.num_classes_ == b.num_classes_ &&
         a.edges_ == b.edges_ && a.labels_ == b.labels_ &&
         a.train_mask_ == b.train_mask_ &&
         a.features_.rows() == b.features_.rows() &&
         a.features_.cols() == b.features_.cols() &&
         a.features_ == b.features_;
}

PropagationMatrix build_propagation(const GraphBundle& graph) {
  const int n = graph.num_nodes();
  std::vector<double> augmented(n);
  for (NodeId i = 0; i < n; ++i) {
    augmented[i] = graph.degree(i) + 1.0;
  }

  SparseMatrix p(n, n);
  std::vector<int> row_sizes(n);
  for (NodeId i = 0; i < n; ++i) row_sizes[i] = graph.degree(i) + 1;
  p.reserve(row_sizes);
  for (NodeId i = 0; i < n; ++i) {
    bool self_done = false;
    auto emit_self = [&] {
      p.insert(i, i) = 1.0 / augmented[i];
      self_done = true;
    };
    for (NodeId j : graph.neighbors(i)) {
      if (!self_done && j > i) emit_self();
      // The product of two integer-valued doubles is exact and commutative,
      // so (i, j) and (j, i) round identically.
      p.insert(i, j) = 1.0 / std::sqrt(augmented[i] * augmented[j]);
    }
    if (!self_done) emit_self();
  }
  p.makeCompressed();
  return {std::move(p)};
}

NodeSet k_hop_neighborhood(const GraphBundle& graph, const NodeSet& seeds,
                           int k) {
  if (k < 0) throw InputError("hop count must be >= 0");
  std::vector<int> dist(graph.num_nodes(), -1);
  std::deque<NodeId> frontier;
  for (NodeId s : seeds) {
    graph.check_node(s);
    if (dist[s] != 0) {
      dist[s] = 0;
      frontier.push_back(s);
    }
  }
  NodeSet out;
  while (!frontier.empty()) {
    NodeId u = frontier.front();
    frontier.pop_front();
    if (dist[u] == k) continue;
    for (NodeId v : graph.neighbors(u)) {
      if (dist[v] >= 0) continue;
      dist[v] = dist[u] + 1;
      out.push_back(v);
      frontier.push_back(v);
    }
  }
  normalize(out);
  return out;
}

NodeSet RemovalResult::map(const NodeSet& old_ids) const {
  NodeSet out;
  out.reserve(old_ids.size());
  for (NodeId id : old_ids) {
    NodeId mapped = old_to_new.at(id);
    if (mapped >= 0) out.push_back(mapped);
  }
  // Dense renumbering preserves order, so out is already sorted.
  return out;
}

void validate_request(const GraphBundle& graph, const UnlearnRequest& request) {
  switch (request.kind) {
    case RequestKind::kNode:
      for (NodeId id : request.nodes) {
        graph.check_node(id);
        if (!graph.is_train(id)) {
          throw InputError("node " + std::to_string(id) +
                           " is a test node; only training nodes can be "
                           "unlearned");
        }
      }
      break;
    case RequestKind::kEdge:
      for (const Edge& e : request.edges) {
        graph.check_node(e.u);
        graph.check_node(e.v);
        if (!graph.has_edge(e.u, e.v)) {
          throw InputError("edge " + edge_str(e) + " is not in the graph");
        }
      }
      break;
    case RequestKind::kFeature:
      for (NodeId id : request.nodes) graph.check_node(id);
      break;
  }
}

RemovalResult remove_request(const GraphBundle& graph,
                             const UnlearnRequest& request) {
  validate_request(graph, request);
  const int n = graph.num_nodes();
  std::vector<NodeId> identity(n);
  for (NodeId i = 0; i < n; ++i) identity[i] = i;

  switch (request.kind) {
    case RequestKind::kNode: {
      std::vector<bool> removed(n, false);
      for (NodeId id : request.nodes) removed[id] = true;
      std::vector<NodeId> old_to_new(n, -1);
      NodeId next = 0;
      for (NodeId i = 0; i < n; ++i) {
        if (!removed[i]) old_to_new[i] = next++;
      }
      if (next == 0) throw InputError("node request would remove every node");
      std::vector<Edge> edges;
      for (const Edge& e : graph.edges()) {
        if (!removed[e.u] && !removed[e.v]) {
          edges.push_back({old_to_new[e.u], old_to_new[e.v]});
        }
      }
      Matrix features(next, graph.feature_dim());
      std::vector<int> labels(next);
      std::vector<bool> train(next);
      for (NodeId i = 0; i < n; ++i) {
        NodeId j = old_to_new[i];
        if (j < 0) continue;
        features.row(j) = graph.features().row(i);
        labels[j] = graph.labels()[i];
        train[j] = graph.is_train(i);
      }
      return {GraphBundle(next, std::move(edges), std::move(features),
                          std::move(labels), std::move(train),
                          graph.num_classes(), graph.name()),
              std::move(old_to_new)};
    }
    case RequestKind::kEdge: {
      std::vector<Edge> edges;
      edges.reserve(graph.num_edges());
      std::set_difference(graph.edges().begin(), graph.edges().end(),
                          request.edges.begin(), request.edges.end(),
                          std::back_inserter(edges));
      return {GraphBundle(n, std::move(edges), graph.features(),
                          graph.labels(), graph.train_mask(),
                          graph.num_classes(), graph.name()),
              std::move(identity)};
    }
    case RequestKind::kFeature: {
      Matrix features = graph.features();
      for (NodeId id : request.nodes) features.row(id).setZero();
      return {GraphBundle(n, graph.edges(), std::move(features),
                          graph.labels(), graph.train_mask(),
                          graph.num_classes(), graph.name()),
              std::move(identity)};
    }
  }
  throw InputError("unknown request kind");
}

NodeSubsets affected_subgraph(const GraphBundle& graph,
                              const UnlearnRequest& request, int k) {
  if (k < 0) throw InputError("hop count must be >= 0");
  validate_request(graph, request);
  const NodeSet& train = graph.train_nodes();
  NodeSubsets subsets;
  subsets.k = k;
  switch (request.kind) {
    case RequestKind::kNode:
      subsets.d_f = set_intersection(request.nodes, train);
      subsets.d_k =
          set_intersection(k_hop_neighborhood(graph, subsets.d_f, k), train);
      break;
    case RequestKind::kEdge: {
      NodeSet endpoints;
      for (const Edge& e : request.edges) {
        endpoints.push_back(e.u);
        endpoints.push_back(e.v);
      }
      normalize(endpoints);
      NodeSet reach = k > 0 ? k_hop_neighborhood(graph, endpoints, k - 1)
                            : NodeSet{};
      subsets.d_i = set_intersection(set_union(endpoints, reach), train);
      break;
    }
    case RequestKind::kFeature: {
      NodeSet reach = k_hop_neighborhood(graph, request.nodes, k);
      subsets.d_i = set_intersection(set_union(request.nodes, reach), train);
      break;
    }
  }
  subsets.d_r = set_difference(train, subsets.d_f);
  return subsets;
}

}  // namespace etr
