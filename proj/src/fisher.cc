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

#include "etr/fisher.h"

#include <string>

#include "etr/errors.h"
#include "json_util.h"

namespace etr {

namespace {

void check_lengths(const Vector& a, const Vector& b) {
  if (a.size() != b.size()) {
    throw InputError("Fisher vectors differ in length: " +
                     std::to_string(a.size()) + " vs " +
                     std::to_string(b.size()));
  }
}

}  // namespace

std::string_view to_string(SubsetLabel label) {
  switch (label) {
    case SubsetLabel::kD:
      return "D";
    case SubsetLabel::kDf:
      return "D_f";
    case SubsetLabel::kDk:
      return "D_k";
    case SubsetLabel::kDr:
      return "D_r";
    case SubsetLabel::kDi:
      return "D_i";
  }
  return "D";
}

SubsetLabel subset_label_from_string(std::string_view text) {
  for (SubsetLabel label : {SubsetLabel::kD, SubsetLabel::kDf, SubsetLabel::kDk,
                            SubsetLabel::kDr, SubsetLabel::kDi}) {
    if (text == to_string(label)) return label;
  }
  throw InputError("unknown subset label '" + std::string(text) + "'");
}

FisherDiag fisher_diag(const GcnEvaluator& evaluator,
                       const std::vector<int>& labels, const NodeSet& subset,
                       SubsetLabel label, FisherMode mode) {
  if (subset.empty()) {
    throw InputError("Fisher diagonal over an empty subset " +
                     std::string(to_string(label)));
  }
  FisherDiag out;
  out.label = label;
  out.subset_size = subset.size();
  if (mode == FisherMode::kBatch) {
    out.values = evaluator.mean_gradient(subset, labels).array().square();
    return out;
  }
  out.values = Vector::Zero(evaluator.num_params());
  evaluator.accumulate(subset, labels, nullptr, &out.values);
  out.values /= static_cast<double>(subset.size());
  return out;
}

FisherDiag fisher_diag(const PropagationMatrix& p, const Matrix& x,
                       const std::vector<int>& labels, const ModelState& model,
                       const NodeSet& subset, SubsetLabel label,
                       FisherMode mode) {
  if (subset.empty()) {
    throw InputError("Fisher diagonal over an empty subset " +
                     std::string(to_string(label)));
  }
  NodeSet sorted = subset;
  normalize(sorted);
  GcnEvaluator evaluator(p, x, model, sorted);
  return fisher_diag(evaluator, labels, sorted, label, mode);
}

Vector importance_ratio(const Vector& num, const Vector& den, double eps) {
  check_lengths(num, den);
  return num.array() / (den.array() + eps);
}

Vector importance_ratio(const FisherDiag& num, const FisherDiag& den,
                        double eps) {
  return importance_ratio(num.values, den.values, eps);
}

Vector product_ratio(const Vector& a, const Vector& b, const Vector& den,
                     double eps) {
  check_lengths(a, b);
  check_lengths(a, den);
  return (a.array() * b.array()) / (den.array() + eps).square();
}

Vector product_ratio(const FisherDiag& a, const FisherDiag& b,
                     const FisherDiag& den, double eps) {
  return product_ratio(a.values, b.values, den.values, eps);
}

std::string fisher_to_json(const FisherDiag& fisher) {
  std::string out = "{\"label\":\"";
  out += to_string(fisher.label);
  out += "\",\"size\":" + std::to_string(fisher.subset_size) + ",\"values\":";
  append_json_array(out, fisher.values);
  out += "}";
  return out;
}

FisherDiag fisher_from_json(std::string_view text) {
  nlohmann::json doc = parse_json(text, "Fisher diagonal");
  FisherDiag out;
  try {
    out.label = subset_label_from_string(doc.at("label").get<std::string>());
    out.subset_size = doc.at("size").get<std::size_t>();
    out.values = vector_from_json(doc.at("values"), "values");
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("malformed Fisher diagonal: ") + e.what());
  }
  if (!out.values.allFinite() || (out.values.array() < 0.0).any()) {
    throw InputError("Fisher values must be finite and nonnegative");
  }
  return out;
}

}  // namespace etr
