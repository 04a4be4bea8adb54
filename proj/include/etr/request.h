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

#ifndef ETR_REQUEST_H_
#define ETR_REQUEST_H_

#include <string>
#include <string_view>
#include <vector>

#include "etr/types.h"

namespace etr {

enum class RequestKind { kNode, kEdge, kFeature };

std::string_view to_string(RequestKind kind);

// What to forget: whole nodes, individual edges, or the feature rows of
// some nodes. Only the member matching `kind` is meaningful.
struct UnlearnRequest {
  RequestKind kind = RequestKind::kNode;
  NodeSet nodes;            // node and feature requests
  std::vector<Edge> edges;  // edge requests, canonical (u < v), sorted

  static UnlearnRequest node(NodeSet ids);
  static UnlearnRequest edge(std::vector<Edge> edges);
  static UnlearnRequest feature(NodeSet ids);

  bool empty() const;
  std::size_t size() const;
};

// {"kind": "node"|"edge"|"feature", "ids": [...]} or {"kind": "edge",
// "edges": [[u, v], ...]}. Throws InputError on malformed input.
UnlearnRequest parse_request_json(std::string_view text);
std::string request_to_json(const UnlearnRequest& request);

UnlearnRequest load_request(const std::string& path);
void save_request(const UnlearnRequest& request, const std::string& path);

}  // namespace etr

#endif  // ETR_REQUEST_H_
