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

#ifndef ETR_FISHER_H_
#define ETR_FISHER_H_

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "etr/gcn.h"
#include "etr/graph.h"
#include "etr/types.h"

namespace etr {

enum class SubsetLabel { kD, kDf, kDk, kDr, kDi };

std::string_view to_string(SubsetLabel label);
SubsetLabel subset_label_from_string(std::string_view text);

// Diagonal of the empirical Fisher information over one training-node
// subset, one entry per flattened parameter.
struct FisherDiag {
  Vector values;
  SubsetLabel label = SubsetLabel::kD;
  std::size_t subset_size = 0;

  std::size_t size() const { return static_cast<std::size_t>(values.size()); }
};

enum class FisherMode {
  // Mean of squared per-node gradients.
  kPerSample,
  // Square of the mean gradient. Only for comparison.
  kBatch,
};

// values[j] = (1/|subset|) sum_i g_ij^2 with g_i the gradient of
// -ln z[i][y_i]; every node propagates over the full graph behind `p`.
// Throws InputError for an empty subset.
FisherDiag fisher_diag(const PropagationMatrix& p, const Matrix& x,
                       const std::vector<int>& labels, const ModelState& model,
                       const NodeSet& subset,
                       SubsetLabel label = SubsetLabel::kD,
                       FisherMode mode = FisherMode::kPerSample);

// Same over an evaluator that already covers `subset`.
FisherDiag fisher_diag(const GcnEvaluator& evaluator,
                       const std::vector<int>& labels, const NodeSet& subset,
                       SubsetLabel label = SubsetLabel::kD,
                       FisherMode mode = FisherMode::kPerSample);

// num[j] / (den[j] + eps).
Vector importance_ratio(const Vector& num, const Vector& den, double eps);
Vector importance_ratio(const FisherDiag& num, const FisherDiag& den,
                        double eps);

// a[j] * b[j] / (den[j] + eps)^2.
Vector product_ratio(const Vector& a, const Vector& b, const Vector& den,
                     double eps);
Vector product_ratio(const FisherDiag& a, const FisherDiag& b,
                     const FisherDiag& den, double eps);

// {"label": "D_f", "size": n, "values": [...]}.
std::string fisher_to_json(const FisherDiag& fisher);
FisherDiag fisher_from_json(std::string_view text);

}  // namespace etr

#endif  // ETR_FISHER_H_
