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

#include "etr/request.h"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "json.hpp"

#include "etr/errors.h"

namespace etr {

using nlohmann::json;

std::string_view to_string(RequestKind kind) {
  switch (kind) {
    case RequestKind::kNode:
      return "node";
    case RequestKind::kEdge:
      return "edge";
    case RequestKind::kFeature:
      return "feature";
  }
  return "unknown";
}

UnlearnRequest UnlearnRequest::node(NodeSet ids) {
  normalize(ids);
  return {RequestKind::kNode, std::move(ids), {}};
}

UnlearnRequest UnlearnRequest::edge(std::vector<Edge> edges) {
  for (Edge& e : edges) e = e.canonical();
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
  return {RequestKind::kEdge, {}, std::move(edges)};
}

UnlearnRequest UnlearnRequest::feature(NodeSet ids) {
  normalize(ids);
  return {RequestKind::kFeature, std::move(ids), {}};
}

bool UnlearnRequest::empty() const { return size() == 0; }

std::size_t UnlearnRequest::size() const {
  return kind == RequestKind::kEdge ? edges.size() : nodes.size();
}

UnlearnRequest parse_request_json(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw InputError(std::string("request is not valid JSON: ") + e.what());
  }
  if (!doc.is_object() || !doc.contains("kind") || !doc["kind"].is_string()) {
    throw InputError("request must be an object with a string \"kind\"");
  }
  const std::string kind = doc["kind"];
  try {
    if (kind == "edge") {
      if (!doc.contains("edges")) {
        throw InputError("edge request needs an \"edges\" array");
      }
      std::vector<Edge> edges;
      for (const json& pair : doc.at("edges")) {
        if (!pair.is_array() || pair.size() != 2) {
          throw InputError("each edge must be a [u, v] pair");
        }
        edges.push_back({pair[0].get<NodeId>(), pair[1].get<NodeId>()});
      }
      return UnlearnRequest::edge(std::move(edges));
    }
    if (kind == "node" || kind == "feature") {
      if (!doc.contains("ids")) {
        throw InputError(kind + " request needs an \"ids\" array");
      }
      NodeSet ids = doc.at("ids").get<NodeSet>();
      return kind == "node" ? UnlearnRequest::node(std::move(ids))
                            : UnlearnRequest::feature(std::move(ids));
    }
  } catch (const json::exception& e) {
    throw InputError(std::string("malformed request: ") + e.what());
  }
  throw InputError("unknown request kind \"" + kind + "\"");
}

std::string request_to_json(const UnlearnRequest& request) {
  json doc;
  doc["kind"] = std::string(to_string(request.kind));
  if (request.kind == RequestKind::kEdge) {
    json edges = json::array();
    for (const Edge& e : request.edges) edges.push_back({e.u, e.v});
    doc["edges"] = std::move(edges);
  } else {
    doc["ids"] = request.nodes;
  }
  return doc.dump();
}

UnlearnRequest load_request(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open request file " + path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_request_json(buffer.str());
}

void save_request(const UnlearnRequest& request, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write request file " + path);
  out << request_to_json(request) << '\n';
  if (!out) throw IoError("write failed for " + path);
}

}  // namespace etr
