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

// etr: train a two-layer GCN, unlearn nodes/edges/features from it, and
// evaluate the result against retraining.
//
// Machine-readable results (JSON or CSV) go to stdout; diagnostics and
// structured errors go to stderr. Exit codes: 0 ok, 1 invalid input,
// 2 numeric failure, 3 I/O failure, 4 missing model state.

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "etr/bundle_io.h"
#include "etr/errors.h"
#include "etr/eval.h"
#include "etr/fisher.h"
#include "etr/gcn.h"
#include "etr/model_io.h"
#include "etr/request.h"
#include "etr/sbm.h"
#include "etr/unlearn.h"
#include "json.hpp"

namespace {

using etr::GraphBundle;
using etr::ModelState;
using nlohmann::json;

constexpr int kExitInput = 1;
constexpr int kExitNumeric = 2;
constexpr int kExitIo = 3;
constexpr int kExitState = 4;

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

int exit_code_for(const etr::Error& e) {
  if (dynamic_cast<const etr::InputError*>(&e)) return kExitInput;
  if (dynamic_cast<const etr::NumericError*>(&e)) return kExitNumeric;
  if (dynamic_cast<const etr::IoError*>(&e)) return kExitIo;
  if (dynamic_cast<const etr::StateError*>(&e)) return kExitState;
  return kExitInput;
}

void report_error(const char* kind, const std::string& message, int code) {
  json err = {{"error", {{"kind", kind}, {"message", message}, {"exit_code", code}}}};
  std::cerr << err.dump() << '\n';
}

// Rejects an output path that names one of the inputs.
void check_distinct(const std::string& out,
                    const std::vector<std::string>& inputs) {
  namespace fs = std::filesystem;
  const fs::path o = fs::weakly_canonical(fs::absolute(out));
  for (const std::string& in : inputs) {
    if (in.empty()) continue;
    if (fs::weakly_canonical(fs::absolute(in)) == o) {
      throw etr::InputError("output path " + out + " would overwrite input " +
                            in);
    }
  }
}

struct TrainFlags {
  etr::TrainConfig config;
  void add(CLI::App* cmd) {
    cmd->add_option("--hidden", config.hidden_dim, "hidden units")
        ->capture_default_str();
    cmd->add_option("--epochs", config.epochs, "gradient-descent epochs")
        ->capture_default_str();
    cmd->add_option("--lr", config.learning_rate, "learning rate")
        ->capture_default_str();
    cmd->add_option("--weight-decay", config.weight_decay, "L2 weight decay")
        ->capture_default_str();
    cmd->add_option("--seed", config.seed, "initialization seed")
        ->capture_default_str();
    cmd->add_option("--init-scale", config.init_scale,
                    "multiplier on the Glorot bound")
        ->capture_default_str();
    cmd->add_flag("--force", config.force,
                  "allow lr / weight decay outside the validated ranges");
  }
  json describe() const {
    return {{"hidden", config.hidden_dim},
            {"epochs", config.epochs},
            {"lr", config.learning_rate},
            {"weight_decay", config.weight_decay},
            {"seed", config.seed},
            {"init_scale", config.init_scale},
            {"note",
             "lr and weight_decay defaults are this tool's choice, not tuned "
             "per dataset"}};
  }
};

struct UnlearnFlags {
  etr::EraseConfig erase;
  etr::RectifyConfig rectify;
  std::optional<double> a, b;
  std::string fisher_mode = "per_sample";
  bool recompute = false;
  void add(CLI::App* cmd) {
    cmd->add_option("--m", erase.m_permille,
                    "per-mille of parameters per Erase threshold")
        ->capture_default_str();
    cmd->add_option("--lambda", rectify.lambda, "Rectify step size")
        ->capture_default_str();
    cmd->add_option("--k", erase.k_hops, "hops defining the neighborhood")
        ->capture_default_str();
    cmd->add_option("--eps", erase.eps, "denominator floor")
        ->capture_default_str();
    cmd->add_option("--a", a, "override the branch-1 prefactor");
    cmd->add_option("--b", b, "override the branch-2 prefactor");
    cmd->add_option("--fisher-mode", fisher_mode, "per_sample or batch")
        ->check(CLI::IsMember({"per_sample", "batch"}))
        ->capture_default_str();
    cmd->add_flag("--recompute-fisher", recompute,
                  "ignore the stored training Fisher diagonal");
  }
  etr::UnlearnOptions options() const {
    etr::UnlearnOptions o;
    o.fisher_mode = fisher_mode == "batch" ? etr::FisherMode::kBatch
                                           : etr::FisherMode::kPerSample;
    o.recompute_fisher_d = recompute;
    return o;
  }
  void finalize() {
    erase.a_override = a;
    erase.b_override = b;
  }
};

int cmd_train(const std::string& data, const std::string& out,
              TrainFlags& flags, bool no_fisher) {
  check_distinct(out, {data});
  GraphBundle graph = etr::load_bundle(data);
  flags.config.store_fisher = !no_fisher;
  std::vector<double> history;
  auto start = Clock::now();
  ModelState model = etr::train(graph, flags.config, &history);
  const double elapsed = seconds_since(start);
  etr::save_model(model, out);
  json result = {{"train_f1", etr::train_f1(graph, model)},
                 {"test_f1", etr::test_f1(graph, model)},
                 {"final_loss", history.empty() ? json(nullptr) : json(history.back())},
                 {"time_s", elapsed},
                 {"config", flags.describe()}};
  std::cout << result.dump() << '\n';
  return 0;
}

int cmd_unlearn(const std::string& model_path, const std::string& data,
                const std::string& request_path, const std::string& out,
                const std::string& report_path, UnlearnFlags& flags) {
  check_distinct(out, {data, model_path, request_path});
  if (!report_path.empty()) {
    check_distinct(report_path, {data, model_path, request_path, out});
  }
  flags.finalize();
  GraphBundle graph = etr::load_bundle(data);
  ModelState model = etr::load_model(model_path);
  etr::UnlearnRequest request = etr::load_request(request_path);
  if (request.empty()) throw etr::InputError("request names nothing to unlearn");
  etr::UnlearnResult result = etr::unlearn(model, graph, request, flags.erase,
                                           flags.rectify, flags.options());
  etr::save_model(result.model, out);
  const std::string report = etr::report_to_json(result.report);
  if (!report_path.empty()) etr::write_text_file_atomic(report_path, report + "\n");
  std::cout << report << '\n';
  return 0;
}

int cmd_retrain(const std::string& data, const std::string& request_path,
                const std::string& out, TrainFlags& flags) {
  check_distinct(out, {data, request_path});
  GraphBundle graph = etr::load_bundle(data);
  etr::UnlearnRequest request = etr::load_request(request_path);
  etr::validate_request(graph, request);
  auto start = Clock::now();
  etr::RemovalResult removal = etr::remove_request(graph, request);
  ModelState model = etr::train(removal.graph, flags.config);
  const double elapsed = seconds_since(start);
  etr::save_model(model, out);
  json result = {{"test_f1", etr::test_f1(removal.graph, model)},
                 {"time_s", elapsed},
                 {"config", flags.describe()}};
  std::cout << result.dump() << '\n';
  return 0;
}

struct EvalArgs {
  std::string data, request, model, unlearned, retrained;
  double ratio = 0.0;
  std::uint64_t seed = 0;
};

int cmd_eval(const EvalArgs& args, UnlearnFlags& flags) {
  flags.finalize();
  GraphBundle graph = etr::load_bundle(args.data);
  std::optional<etr::UnlearnRequest> request;
  if (!args.request.empty()) {
    request = etr::load_request(args.request);
    etr::validate_request(graph, *request);
  }
  const GraphBundle eval_graph =
      request ? etr::remove_request(graph, *request).graph : graph;

  ModelState vanilla = etr::load_model(args.model);
  std::optional<ModelState> retrained;
  if (!args.retrained.empty()) retrained = etr::load_model(args.retrained);

  auto row_for = [&](const std::string& method, const ModelState& m,
                     double time_s) {
    etr::CsvRow row;
    row.ratio = args.ratio;
    row.seed = args.seed;
    row.method = method;
    row.f1 = etr::test_f1(eval_graph, m);
    if (retrained) row.rms_dist = etr::rms_param_distance(m, *retrained);
    row.time_s = time_s;
    return row;
  };

  std::vector<etr::CsvRow> rows;
  rows.push_back(row_for("vanilla", vanilla, 0.0));
  if (!args.unlearned.empty()) {
    rows.push_back(row_for("unlearned", etr::load_model(args.unlearned), 0.0));
  } else if (request && vanilla.grad_snapshot) {
    // No unlearned model supplied: run the pipeline and also score its
    // gradient estimate against the directly computed remaining gradient.
    std::optional<etr::UnlearnResult> run;
    etr::Measurement m = etr::measure([&] {
      run.emplace(etr::unlearn(vanilla, graph, *request, flags.erase,
                               flags.rectify, flags.options()));
    });
    const etr::UnlearnResult& result = *run;
    etr::CsvRow row = row_for("unlearned", result.model, m.wall_time_s);
    etr::GradientDiff diff = etr::gradient_diff(
        result.rectify_gradient,
        etr::training_gradient(result.removal.graph, result.erased));
    row.ad = diff.ad;
    row.rd = diff.rd;
    rows.push_back(row);
  }
  if (retrained) rows.push_back(row_for("retrain", *retrained, 0.0));
  std::cout << etr::to_csv(rows);
  return 0;
}

int cmd_attack(const std::string& data, const std::vector<double>& ratios,
               std::uint64_t seed, const std::string& summary,
               TrainFlags& train_flags, UnlearnFlags& flags) {
  if (!summary.empty()) check_distinct(summary, {data});
  flags.finalize();
  GraphBundle graph = etr::load_bundle(data);
  int threads = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  if (const char* env = std::getenv("ETR_THREADS")) {
    try {
      threads = std::max(1, std::min(threads, std::stoi(env)));
    } catch (const std::exception&) {
      throw etr::InputError("ETR_THREADS must be a positive integer");
    }
  }
  auto rows = etr::adversarial_experiment(graph, ratios, train_flags.config,
                                          flags.erase, flags.rectify, seed,
                                          threads);
  std::cout << etr::to_csv(etr::adversarial_csv_rows(rows));
  if (!summary.empty()) {
    etr::write_text_file_atomic(summary,
                                etr::adversarial_summary_json(rows) + "\n");
  }
  return 0;
}

int cmd_gen_sbm(const std::string& out, const etr::SbmConfig& config) {
  GraphBundle graph = etr::generate_sbm(config);
  etr::save_bundle(graph, out);
  json manifest = {{"name", graph.name()},
                   {"num_nodes", graph.num_nodes()},
                   {"num_edges", graph.num_edges()},
                   {"feature_dim", graph.feature_dim()},
                   {"num_classes", graph.num_classes()},
                   {"num_train", graph.train_nodes().size()},
                   {"seed", config.seed}};
  std::cout << manifest.dump() << '\n';
  return 0;
}

int cmd_audit(const std::string& model_path, const std::string& retrained_path,
              const std::string& data, const std::string& request_path,
              int m_permille, double eps) {
  GraphBundle graph = etr::load_bundle(data);
  ModelState model = etr::load_model(model_path);
  etr::UnlearnRequest request = etr::load_request(request_path);
  if (request.kind != etr::RequestKind::kNode) {
    throw etr::InputError("the audit covers node requests only");
  }
  etr::validate_request(graph, request);
  std::optional<ModelState> retrained;
  if (!retrained_path.empty()) retrained = etr::load_model(retrained_path);

  const etr::NodeSubsets subsets = etr::affected_subgraph(graph, request, 0);
  if (subsets.d_f.empty()) throw etr::InputError("request names no training node");
  const etr::PropagationMatrix p = etr::build_propagation(graph);
  const auto& labels = graph.labels();
  const auto& x = graph.features();
  etr::FisherDiag f_d =
      etr::fisher_diag(p, x, labels, model, graph.train_nodes(), etr::SubsetLabel::kD);
  etr::FisherDiag f_df =
      etr::fisher_diag(p, x, labels, model, subsets.d_f, etr::SubsetLabel::kDf);
  etr::FisherDiag f_dr =
      etr::fisher_diag(p, x, labels, model, subsets.d_r, etr::SubsetLabel::kDr);
  const auto mask = etr::top_ratio_indices(
      etr::importance_ratio(f_df, f_d, eps), m_permille);
  etr::AuditRecord record = etr::theorem_audit(
      model, retrained ? &*retrained : nullptr, f_d, f_df, f_dr, mask, eps);
  json doc = json::parse(etr::audit_to_json(record));
  doc["mask"] = {{"rule", "top ratio F_Df / F_D"}, {"m_permille", m_permille}};
  std::cout << doc.dump() << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Training-free unlearning for two-layer GCNs"};
  app.require_subcommand(1);

  std::string data, out, model, request, report, retrained, summary;
  TrainFlags train_flags;
  UnlearnFlags unlearn_flags;
  bool no_fisher = false;

  auto* train = app.add_subcommand("train", "train a GCN on a bundle");
  train->add_option("--data", data, "bundle directory")->required();
  train->add_option("--out", out, "output model JSON")->required();
  train_flags.add(train);
  train->add_flag("--no-fisher", no_fisher,
                  "do not store the training Fisher diagonal");

  auto* unlearn = app.add_subcommand("unlearn", "run Erase and Rectify");
  unlearn->add_option("--model", model, "trained model JSON")->required();
  unlearn->add_option("--data", data, "bundle the model was trained on")
      ->required();
  unlearn->add_option("--request", request, "request JSON")->required();
  unlearn->add_option("--out", out, "output model JSON")->required();
  unlearn->add_option("--report", report, "also write the report here");
  unlearn_flags.add(unlearn);

  auto* retrain = app.add_subcommand("retrain", "retrain without the request");
  retrain->add_option("--data", data, "bundle directory")->required();
  retrain->add_option("--request", request, "request JSON")->required();
  retrain->add_option("--out", out, "output model JSON")->required();
  train_flags.add(retrain);

  EvalArgs eval_args;
  auto* eval = app.add_subcommand("eval", "score models as CSV");
  eval->add_option("--data", eval_args.data, "bundle directory")->required();
  eval->add_option("--model", eval_args.model, "original model JSON")
      ->required();
  eval->add_option("--request", eval_args.request,
                   "request; models are scored on the remaining graph");
  eval->add_option("--unlearned", eval_args.unlearned, "unlearned model JSON");
  eval->add_option("--retrained", eval_args.retrained, "retrained model JSON");
  eval->add_option("--ratio", eval_args.ratio, "value for the ratio column");
  eval->add_option("--seed", eval_args.seed, "value for the seed column");
  unlearn_flags.add(eval);

  std::vector<double> ratios{0.0, 0.1, 0.2, 0.3};
  std::uint64_t attack_seed = 0;
  auto* attack = app.add_subcommand("attack", "adversarial-edge experiment");
  attack->add_option("--data", data, "clean bundle directory")->required();
  attack->add_option("--ratios", ratios, "attack ratios")
      ->delimiter(',')
      ->capture_default_str();
  attack->add_option("--attack-seed", attack_seed, "edge-injection seed")
      ->capture_default_str();
  attack->add_option("--summary", summary, "write a JSON summary here");
  train_flags.add(attack);
  unlearn_flags.add(attack);

  std::string sbm_out;
  etr::SbmConfig sbm;
  auto* gen = app.add_subcommand("gen-sbm", "write a synthetic SBM bundle");
  gen->add_option("--out", sbm_out, "bundle directory")->required();
  gen->add_option("--nodes", sbm.num_nodes)->capture_default_str();
  gen->add_option("--classes", sbm.num_classes)->capture_default_str();
  gen->add_option("--p-in", sbm.p_in)->capture_default_str();
  gen->add_option("--p-out", sbm.p_out)->capture_default_str();
  gen->add_option("--dim", sbm.feature_dim)->capture_default_str();
  gen->add_option("--seed", sbm.seed)->capture_default_str();
  gen->add_option("--noise", sbm.noise_sigma)->capture_default_str();
  gen->add_option("--train-fraction", sbm.train_fraction)
      ->capture_default_str();
  gen->add_option("--words", sbm.words_per_node,
                  "binary bag-of-words features with this many words")
      ->capture_default_str();
  gen->add_option("--purity", sbm.topic_purity,
                  "share of words drawn from the class topic")
      ->capture_default_str();
  gen->add_option("--name", sbm.name)->capture_default_str();

  int audit_m = 10;
  double audit_eps = 1e-12;
  auto* audit = app.add_subcommand("audit", "distance bound diagnostics");
  audit->add_option("--model", model, "trained model JSON")->required();
  audit->add_option("--retrained", retrained, "retrained model JSON");
  audit->add_option("--data", data, "bundle directory")->required();
  audit->add_option("--request", request, "node request JSON")->required();
  audit->add_option("--m", audit_m, "per-mille of masked parameters")
      ->capture_default_str();
  audit->add_option("--eps", audit_eps, "denominator floor")
      ->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitInput;
  }

  try {
    if (*train) return cmd_train(data, out, train_flags, no_fisher);
    if (*unlearn) {
      return cmd_unlearn(model, data, request, out, report, unlearn_flags);
    }
    if (*retrain) return cmd_retrain(data, request, out, train_flags);
    if (*eval) return cmd_eval(eval_args, unlearn_flags);
    if (*attack) {
      return cmd_attack(data, ratios, attack_seed, summary, train_flags,
                        unlearn_flags);
    }
    if (*gen) return cmd_gen_sbm(sbm_out, sbm);
    if (*audit) {
      return cmd_audit(model, retrained, data, request, audit_m, audit_eps);
    }
  } catch (const etr::ValidationError& e) {
    report_error(e.kind(), e.what(), kExitInput);
    return kExitInput;
  } catch (const etr::Error& e) {
    const int code = exit_code_for(e);
    report_error(e.kind(), e.what(), code);
    return code;
  } catch (const std::filesystem::filesystem_error& e) {
    report_error("io", e.what(), kExitIo);
    return kExitIo;
  } catch (const std::exception& e) {
    report_error("internal", e.what(), kExitInput);
    return kExitInput;
  }
  return kExitInput;
}
