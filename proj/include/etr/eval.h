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

#ifndef ETR_EVAL_H_
#define ETR_EVAL_H_

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "etr/gcn.h"
#include "etr/graph.h"
#include "etr/request.h"
#include "etr/unlearn.h"

namespace etr {

// Applies the request and trains from scratch with the same config (and
// therefore the same seed).
ModelState retrain_oracle(const GraphBundle& graph,
                          const UnlearnRequest& request,
                          const TrainConfig& config);

// Fraction of `mask` nodes whose prediction equals the label. For
// single-label multi-class data this is micro-F1. Throws on an empty mask.
double micro_f1(const std::vector<int>& predictions,
                const std::vector<int>& labels, const NodeSet& mask);

// Test-split micro-F1 of `model` on `graph`.
double test_f1(const GraphBundle& graph, const ModelState& model);
double train_f1(const GraphBundle& graph, const ModelState& model);

// Mean loss gradient of `model` over the training nodes of `graph`, by the
// full-graph backward pass.
Vector training_gradient(const GraphBundle& graph, const ModelState& model);

// sqrt(mean_j (a_j - b_j)^2). Throws InputError on a length mismatch.
double rms_param_distance(const Vector& a, const Vector& b);
double rms_param_distance(const ModelState& a, const ModelState& b);

struct GradientDiff {
  double ad = 0.0;  // mean |approx - truth|
  double rd = 0.0;  // ||approx - truth|| / (||truth|| + 1e-12)
};

GradientDiff gradient_diff(const Vector& approx, const Vector& truth);

struct Measurement {
  double wall_time_s = 0.0;
  // Peak resident set size of the process while `run` executed, read from
  // /proc; 0 where unavailable. An estimate, not an allocation count.
  std::size_t peak_mem_estimate_bytes = 0;
};

Measurement measure(const std::function<void()>& run);

struct EvalResult {
  double micro_f1 = 0.0;
  std::optional<double> rms_param_distance;
  std::optional<double> grad_ad;
  std::optional<double> grad_rd;
  double wall_time_s = 0.0;
  std::size_t peak_mem_estimate_bytes = 0;
};

// One line of the results CSV.
struct CsvRow {
  double ratio = 0.0;
  std::uint64_t seed = 0;
  std::string method;
  double f1 = 0.0;
  std::optional<double> rms_dist;
  std::optional<double> ad;
  std::optional<double> rd;
  double time_s = 0.0;
};

inline constexpr const char* kCsvHeader = "ratio,seed,method,f1,rms_dist,ad,rd,time_s";

// Header line plus one line per row; absent values are empty fields.
std::string to_csv(const std::vector<CsvRow>& rows);

struct AdversarialRow {
  double ratio = 0.0;
  std::uint64_t seed = 0;
  std::size_t injected_edges = 0;
  double vanilla_f1 = 0.0;
  double unlearned_f1 = 0.0;
  double retrain_f1 = 0.0;
  double vanilla_rms = 0.0;    // distance to the clean retrain
  double unlearned_rms = 0.0;  // distance to the clean retrain
  double vanilla_time_s = 0.0;
  double unlearn_time_s = 0.0;
  double retrain_time_s = 0.0;
};

// For each ratio: inject cross-class training edges (seeded by `seed`),
// train on the poisoned graph, unlearn the injected edges, and compare with
// a model trained on the clean graph. F1 is measured on the test split,
// with the vanilla model served on the poisoned graph and the other two on
// the clean graph. `threads` > 1 runs ratios concurrently.
std::vector<AdversarialRow> adversarial_experiment(
    const GraphBundle& graph, const std::vector<double>& ratios,
    const TrainConfig& train_config, const EraseConfig& erase_config,
    const RectifyConfig& rectify_config, std::uint64_t seed, int threads = 1);

std::vector<CsvRow> adversarial_csv_rows(const std::vector<AdversarialRow>& rows);
std::string adversarial_summary_json(const std::vector<AdversarialRow>& rows);

}  // namespace etr

#endif  // ETR_EVAL_H_
