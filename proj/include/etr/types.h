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

#ifndef ETR_TYPES_H_
#define ETR_TYPES_H_

#include <compare>
#include <cstdint>
#include <vector>

#include <Eigen/Core>

namespace etr {

// Row-major so that vec(W) is a plain copy of the storage.
using Matrix =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

using NodeId = std::int32_t;
// Sorted, duplicate-free.
using NodeSet = std::vector<NodeId>;

struct Edge {
  NodeId u = 0;
  NodeId v = 0;

  // Orientation with u < v.
  Edge canonical() const { return u < v ? Edge{u, v} : Edge{v, u}; }
  friend auto operator<=>(const Edge&, const Edge&) = default;
};

// Sorts and removes duplicates in place.
void normalize(NodeSet& set);

// Sorted-set algebra on NodeSet.
NodeSet set_union(const NodeSet& a, const NodeSet& b);
NodeSet set_intersection(const NodeSet& a, const NodeSet& b);
NodeSet set_difference(const NodeSet& a, const NodeSet& b);

}  // namespace etr

#endif  // ETR_TYPES_H_
