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

#ifndef ETR_SBM_H_
#define ETR_SBM_H_

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "etr/graph.h"

namespace etr {

struct SbmConfig {
  int num_nodes = 300;
  int num_classes = 3;
  double p_in = 0.2;
  double p_out = 0.02;
  int feature_dim = 16;
  std::uint64_t seed = 0;
  double noise_sigma = 0.5;
  double train_fraction = 0.9;
  std::string name = "sbm";
  // When positive, features are binary bag-of-words rows instead of the
  // Gaussian model: each node switches on this many distinct columns, each
  // drawn from its class's contiguous topic block with probability
  // topic_purity and uniformly from all columns otherwise.
  int words_per_node = 0;
  double topic_purity = 0.5;
};

// Stochastic block model with contiguous, equal-size blocks (sizes differ by
// at most one). Node i belongs to block i * C / n and carries that block as
// its label. Features are a one-hot class indicator in column
// (label mod feature_dim) plus N(0, noise_sigma^2) noise on every entry.
// With words_per_node > 0 the binary bag-of-words model above is used
// instead. floor(train_fraction * n) nodes, chosen by a seeded shuffle, form the
// training set. Deterministic in the seed.
GraphBundle generate_sbm(const SbmConfig& config);

GraphBundle generate_sbm(int num_nodes, int num_classes, double p_in,
                         double p_out, int feature_dim, std::uint64_t seed);

// Adds round(ratio * |E|) new edges, each joining two distinct training
// nodes with different labels and absent from the graph. Returns the
// poisoned graph and the injected edges (canonical, sorted).
std::pair<GraphBundle, std::vector<Edge>> inject_adversarial_edges(
    const GraphBundle& graph, double ratio, std::uint64_t seed);

}  // namespace etr

#endif  // ETR_SBM_H_
