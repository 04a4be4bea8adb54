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

#ifndef ETR_BUNDLE_IO_H_
#define ETR_BUNDLE_IO_H_

#include <string>

#include "etr/graph.h"

namespace etr {

inline constexpr int kBundleFormatVersion = 1;

struct BundleManifest {
  int format_version = kBundleFormatVersion;
  std::string name;
  int num_nodes = 0;
  std::size_t num_edges = 0;
  int feature_dim = 0;
  int num_classes = 0;
};

// A bundle directory holds
//   meta.json     {"format_version": 1, "name", "num_nodes", "num_edges",
//                  "feature_dim", "num_classes"}; extra keys are ignored
//   edges.tsv     "u<TAB>v" per undirected edge, u < v
//   features.csv  one row of feature_dim comma-separated floats per node
//   labels.csv    one class id per line
//   splits.csv    "train" or "test" per line
// Malformed content raises ValidationError naming the file and line.
BundleManifest read_manifest(const std::string& dir);
GraphBundle load_bundle(const std::string& dir);

// Writes into a fresh sibling directory and renames it into place. An
// existing `dir` is replaced only if it is empty or holds a meta.json.
void save_bundle(const GraphBundle& graph, const std::string& dir);

}  // namespace etr

#endif  // ETR_BUNDLE_IO_H_
