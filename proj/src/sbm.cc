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

#include "etr/sbm.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <set>

#include "etr/errors.h"

namespace etr {

namespace {

// Independent stream per purpose so that, e.g., changing the feature
// dimension does not reshuffle the edges.
std::mt19937_64 stream(std::uint64_t seed, std::uint64_t purpose) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed),
                    static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(purpose)};
  return std::mt19937_64(seq);
}

constexpr int kMaxRedraws = 1000;

}  // namespace

GraphBundle generate_sbm(const SbmConfig& config) {
  const int n = config.num_nodes;
  const int c = config.num_classes;
  if (n <= 0) throw InputError("num_nodes must be positive");
  if (c <= 0) throw InputError("num_classes must be positive");
  if (c > n) throw InputError("num_classes exceeds num_nodes");
  if (config.feature_dim <= 0) throw InputError("feature_dim must be positive");
  if (!(config.p_out >= 0.0 && config.p_out <= config.p_in &&
        config.p_in <= 1.0)) {
    throw InputError("need 0 <= p_out <= p_in <= 1");
  }
  if (config.words_per_node > 0 &&
      !(config.topic_purity >= 0.0 && config.topic_purity <= 1.0)) {
    throw InputError("topic_purity must lie in [0, 1]");
  }
  if (!(config.train_fraction > 0.0 && config.train_fraction < 1.0)) {
    throw InputError("train_fraction must lie in (0, 1)");
  }

  std::vector<int> labels(n);
  for (int i = 0; i < n; ++i) {
    labels[i] = static_cast<int>(static_cast<std::int64_t>(i) * c / n);
  }

  auto edge_rng = stream(config.seed, 1);
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  std::vector<Edge> edges;
  for (NodeId u = 0; u < n; ++u) {
    for (NodeId v = u + 1; v < n; ++v) {
      double p = labels[u] == labels[v] ? config.p_in : config.p_out;
      if (coin(edge_rng) < p) edges.push_back({u, v});
    }
  }

  auto feature_rng = stream(config.seed, 2);
  Matrix features = Matrix::Zero(n, config.feature_dim);
  if (config.words_per_node > 0) {
    const int d = config.feature_dim;
    const int block = std::max(1, d / c);
    std::uniform_int_distribution<int> any_word(0, d - 1);
    std::uniform_int_distribution<int> topic_word(0, block - 1);
    for (int i = 0; i < n; ++i) {
      const int base = std::min(d - block, (labels[i] * block) % d);
      const int words = std::min(config.words_per_node, d);
      for (int placed = 0; placed < words;) {
        int j = coin(feature_rng) < config.topic_purity
                    ? base + topic_word(feature_rng)
                    : any_word(feature_rng);
        if (features(i, j) != 0.0) continue;
        features(i, j) = 1.0;
        ++placed;
      }
    }
  } else {
    std::normal_distribution<double> noise(0.0, config.noise_sigma);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < config.feature_dim; ++j) {
        features(i, j) = noise(feature_rng);
      }
      features(i, labels[i] % config.feature_dim) += 1.0;
    }
  }

  auto split_rng = stream(config.seed, 3);
  std::vector<NodeId> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), split_rng);
  const int num_train = static_cast<int>(std::floor(config.train_fraction * n));
  std::vector<bool> train(n, false);
  for (int i = 0; i < num_train; ++i) train[order[i]] = true;

  return GraphBundle(n, std::move(edges), std::move(features),
                     std::move(labels), std::move(train), c, config.name);
}

GraphBundle generate_sbm(int num_nodes, int num_classes, double p_in,
                         double p_out, int feature_dim, std::uint64_t seed) {
  SbmConfig config;
  config.num_nodes = num_nodes;
  config.num_classes = num_classes;
  config.p_in = p_in;
  config.p_out = p_out;
  config.feature_dim = feature_dim;
  config.seed = seed;
  return generate_sbm(config);
}

std::pair<GraphBundle, std::vector<Edge>> inject_adversarial_edges(
    const GraphBundle& graph, double ratio, std::uint64_t seed) {
  if (!(ratio >= 0.0 && ratio <= 1.0)) {
    throw InputError("attack ratio must lie in [0, 1]");
  }
  const auto count = static_cast<std::size_t>(
      std::llround(ratio * static_cast<double>(graph.num_edges())));
  if (count == 0) return {graph, {}};

  const NodeSet& train = graph.train_nodes();
  std::set<int> classes;
  for (NodeId v : train) classes.insert(graph.labels()[v]);
  if (classes.size() < 2) {
    throw InputError("adversarial edges need training nodes from two classes");
  }

  auto rng = stream(seed, 4);
  std::uniform_int_distribution<std::size_t> pick(0, train.size() - 1);
  std::set<Edge> injected;
  while (injected.size() < count) {
    bool placed = false;
    for (int attempt = 0; attempt < kMaxRedraws && !placed; ++attempt) {
      Edge e{train[pick(rng)], train[pick(rng)]};
      if (e.u == e.v) continue;
      if (graph.labels()[e.u] == graph.labels()[e.v]) continue;
      e = e.canonical();
      if (graph.has_edge(e.u, e.v) || injected.contains(e)) continue;
      injected.insert(e);
      placed = true;
    }
    if (!placed) {
      throw InputError("could not place adversarial edge " +
                       std::to_string(injected.size() + 1) + " of " +
                       std::to_string(count) + " within " +
                       std::to_string(kMaxRedraws) + " draws");
    }
  }

  std::vector<Edge> added(injected.begin(), injected.end());
  std::vector<Edge> edges = graph.edges();
  edges.insert(edges.end(), added.begin(), added.end());
  GraphBundle poisoned(graph.num_nodes(), std::move(edges), graph.features(),
                       graph.labels(), graph.train_mask(), graph.num_classes(),
                       graph.name());
  return {std::move(poisoned), std::move(added)};
}

}  // namespace etr
