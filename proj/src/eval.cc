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

#include "etr/eval.h"

#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <exception>
#include <fstream>
#include <mutex>
#include <string>
#include <thread>

#include "etr/errors.h"
#include "etr/sbm.h"
#include "json.hpp"

namespace etr {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

void append_number(std::string& out, double v) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  out.append(buf, res.ptr);
}

void append_optional(std::string& out, const std::optional<double>& v) {
  if (v) append_number(out, *v);
}

std::size_t read_peak_rss() {
  std::ifstream status("/proc/self/status");
  std::string line;
  while (std::getline(status, line)) {
    if (line.rfind("VmHWM:", 0) == 0) {
      return std::stoull(line.substr(6)) * 1024;
    }
  }
  return 0;
}

AdversarialRow run_ratio(const GraphBundle& graph, double ratio,
                         const ModelState& clean_model, double clean_time,
                         const TrainConfig& train_config,
                         const EraseConfig& erase_config,
                         const RectifyConfig& rectify_config,
                         std::uint64_t seed) {
  AdversarialRow row;
  row.ratio = ratio;
  row.seed = seed;
  auto [poisoned, injected] = inject_adversarial_edges(graph, ratio, seed);
  row.injected_edges = injected.size();

  auto t = Clock::now();
  ModelState vanilla = train(poisoned, train_config);
  row.vanilla_time_s = seconds_since(t);

  t = Clock::now();
  UnlearnResult result =
      unlearn(vanilla, poisoned, UnlearnRequest::edge(injected), erase_config,
              rectify_config);
  row.unlearn_time_s = seconds_since(t);

  row.retrain_time_s = clean_time;
  row.vanilla_f1 = test_f1(poisoned, vanilla);
  row.unlearned_f1 = test_f1(result.removal.graph, result.model);
  row.retrain_f1 = test_f1(graph, clean_model);
  row.vanilla_rms = rms_param_distance(vanilla, clean_model);
  row.unlearned_rms = rms_param_distance(result.model, clean_model);
  return row;
}

}  // namespace

ModelState retrain_oracle(const GraphBundle& graph,
                          const UnlearnRequest& request,
                          const TrainConfig& config) {
  validate_request(graph, request);
  return train(remove_request(graph, request).graph, config);
}

double micro_f1(const std::vector<int>& predictions,
                const std::vector<int>& labels, const NodeSet& mask) {
  if (mask.empty()) throw InputError("micro-F1 over an empty mask");
  std::size_t correct = 0;
  for (NodeId i : mask) {
    if (i < 0 || static_cast<std::size_t>(i) >= predictions.size() ||
        static_cast<std::size_t>(i) >= labels.size()) {
      throw InputError("mask node " + std::to_string(i) + " out of range");
    }
    if (predictions[i] == labels[i]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(mask.size());
}

double test_f1(const GraphBundle& graph, const ModelState& model) {
  return micro_f1(predict(graph, model), graph.labels(), graph.test_nodes());
}

double train_f1(const GraphBundle& graph, const ModelState& model) {
  return micro_f1(predict(graph, model), graph.labels(), graph.train_nodes());
}

Vector training_gradient(const GraphBundle& graph, const ModelState& model) {
  const PropagationMatrix p = build_propagation(graph);
  const ForwardTrace trace = forward(p, graph.features(), model);
  return backward(p, graph.features(), trace, graph.labels(),
                  graph.train_nodes(), model);
}

double rms_param_distance(const Vector& a, const Vector& b) {
  if (a.size() != b.size()) {
    throw InputError("parameter vectors differ in length: " +
                     std::to_string(a.size()) + " vs " +
                     std::to_string(b.size()));
  }
  if (a.size() == 0) return 0.0;
  return std::sqrt((a - b).squaredNorm() / static_cast<double>(a.size()));
}

double rms_param_distance(const ModelState& a, const ModelState& b) {
  if (a.w0.rows() != b.w0.rows() || a.w0.cols() != b.w0.cols() ||
      a.w1.cols() != b.w1.cols()) {
    throw InputError("models have different shapes");
  }
  return rms_param_distance(a.flatten(), b.flatten());
}

GradientDiff gradient_diff(const Vector& approx, const Vector& truth) {
  if (approx.size() != truth.size()) {
    throw InputError("gradient vectors differ in length");
  }
  GradientDiff out;
  if (approx.size() == 0) return out;
  out.ad = (approx - truth).cwiseAbs().mean();
  out.rd = (approx - truth).norm() / (truth.norm() + 1e-12);
  return out;
}

Measurement measure(const std::function<void()>& run) {
  {
    // Resets VmHWM to the current RSS; ignored where unsupported.
    std::ofstream clear("/proc/self/clear_refs");
    if (clear) clear << "5";
  }
  const auto start = Clock::now();
  run();
  Measurement m;
  m.wall_time_s = seconds_since(start);
  m.peak_mem_estimate_bytes = read_peak_rss();
  return m;
}

std::string to_csv(const std::vector<CsvRow>& rows) {
  std::string out = kCsvHeader;
  out += '\n';
  for (const CsvRow& r : rows) {
    append_number(out, r.ratio);
    out += ',' + std::to_string(r.seed) + ',' + r.method + ',';
    append_number(out, r.f1);
    out += ',';
    append_optional(out, r.rms_dist);
    out += ',';
    append_optional(out, r.ad);
    out += ',';
    append_optional(out, r.rd);
    out += ',';
    append_number(out, r.time_s);
    out += '\n';
  }
  return out;
}

std::vector<AdversarialRow> adversarial_experiment(
    const GraphBundle& graph, const std::vector<double>& ratios,
    const TrainConfig& train_config, const EraseConfig& erase_config,
    const RectifyConfig& rectify_config, std::uint64_t seed, int threads) {
  for (double r : ratios) {
    if (!(r >= 0.0 && r <= 1.0)) throw InputError("attack ratios must lie in [0, 1]");
  }
  erase_config.validate();
  rectify_config.validate();
  auto t = Clock::now();
  const ModelState clean = train(graph, train_config);
  const double clean_time = seconds_since(t);

  std::vector<AdversarialRow> rows(ratios.size());
  const int workers =
      std::max(1, std::min<int>(threads, static_cast<int>(ratios.size())));
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mu;
  auto work = [&] {
    for (std::size_t i = next++; i < ratios.size(); i = next++) {
      try {
        rows[i] = run_ratio(graph, ratios[i], clean, clean_time, train_config,
                            erase_config, rectify_config, seed);
      } catch (...) {
        std::lock_guard<std::mutex> lock(failure_mu);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  if (workers == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& th : pool) th.join();
  }
  if (failure) std::rethrow_exception(failure);
  return rows;
}

std::vector<CsvRow> adversarial_csv_rows(
    const std::vector<AdversarialRow>& rows) {
  std::vector<CsvRow> out;
  for (const AdversarialRow& r : rows) {
    out.push_back({r.ratio, r.seed, "vanilla", r.vanilla_f1, r.vanilla_rms,
                   std::nullopt, std::nullopt, r.vanilla_time_s});
    out.push_back({r.ratio, r.seed, "unlearned", r.unlearned_f1,
                   r.unlearned_rms, std::nullopt, std::nullopt,
                   r.unlearn_time_s});
    out.push_back({r.ratio, r.seed, "retrain", r.retrain_f1, 0.0, std::nullopt,
                   std::nullopt, r.retrain_time_s});
  }
  return out;
}

std::string adversarial_summary_json(const std::vector<AdversarialRow>& rows) {
  nlohmann::json table = nlohmann::json::array();
  for (const AdversarialRow& r : rows) {
    table.push_back({{"ratio", r.ratio},
                     {"seed", r.seed},
                     {"injected_edges", r.injected_edges},
                     {"vanilla_f1", r.vanilla_f1},
                     {"unlearned_f1", r.unlearned_f1},
                     {"retrain_f1", r.retrain_f1}});
  }
  nlohmann::json doc = {{"evaluation_split", "clean test split"},
                        {"vanilla_graph", "poisoned"},
                        {"rows", std::move(table)}};
  return doc.dump();
}

}  // namespace etr
