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

#include "etr/unlearn.h"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <limits>
#include <string>

#include "etr/errors.h"
#include "json.hpp"

namespace etr {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

void check_length(const Vector& v, std::size_t n, const char* what) {
  if (static_cast<std::size_t>(v.size()) != n) {
    throw InputError(std::string(what) + " has length " +
                     std::to_string(v.size()) + ", expected " +
                     std::to_string(n));
  }
}

// Threshold for one branch: the r-th largest ratio, lifted to the smallest
// positive ratio when it is zero so that selected multipliers stay positive.
double branch_threshold(const Vector& ratios, int m_permille) {
  double t = select_threshold(ratios, m_permille);
  if (std::isinf(t) || t > 0.0) return t;
  double smallest = kInf;
  for (Eigen::Index j = 0; j < ratios.size(); ++j) {
    if (ratios(j) > 0.0) smallest = std::min(smallest, ratios(j));
  }
  return smallest;
}

void finish_stats(EraseStats& stats, const Vector& coef,
                  const std::vector<bool>& edited) {
  double lo = kInf, hi = -kInf, total = 0.0;
  std::size_t count = 0;
  for (std::size_t j = 0; j < edited.size(); ++j) {
    if (!edited[j]) continue;
    lo = std::min(lo, coef(j));
    hi = std::max(hi, coef(j));
    total += coef(j);
    ++count;
  }
  if (count > 0) {
    stats.coef_min = lo;
    stats.coef_max = hi;
    stats.coef_mean = total / static_cast<double>(count);
  }
}

EraseResult unchanged(const ModelState& model) {
  EraseResult out{model, {}};
  out.model.clear_snapshots();
  out.stats.num_params = model.num_params();
  out.stats.gamma = out.stats.eta = kInf;
  out.stats.a = out.stats.b = kInf;
  return out;
}

// Fisher diagonal and mean gradient of one subset from a single pass.
struct SubsetStats {
  FisherDiag fisher;
  Vector mean_grad;
};

SubsetStats subset_stats(const GcnEvaluator* evaluator,
                         const std::vector<int>& labels, const NodeSet& nodes,
                         SubsetLabel label, FisherMode mode,
                         std::size_t num_params) {
  SubsetStats out;
  out.fisher = {Vector::Zero(num_params), label, nodes.size()};
  if (nodes.empty()) return out;
  if (mode == FisherMode::kBatch) {
    out.mean_grad = evaluator->mean_gradient(nodes, labels);
    out.fisher.values = out.mean_grad.array().square();
    return out;
  }
  out.mean_grad = Vector::Zero(num_params);
  evaluator->accumulate(nodes, labels, &out.mean_grad, &out.fisher.values);
  const double scale = 1.0 / static_cast<double>(nodes.size());
  out.mean_grad *= scale;
  out.fisher.values *= scale;
  return out;
}

nlohmann::json number(double v) {
  return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr);
}

}  // namespace

void EraseConfig::validate() const {
  if (m_permille < 0 || m_permille > 1000) {
    throw InputError("m_permille must lie in [0, 1000]");
  }
  if (k_hops < 0) throw InputError("k_hops must be >= 0");
  if (!(eps >= 0.0) || !std::isfinite(eps)) {
    throw InputError("eps must be a nonnegative finite number");
  }
  for (const auto& o : {a_override, b_override}) {
    if (o && (!(*o > 0.0) || !std::isfinite(*o))) {
      throw InputError("prefactor overrides must be positive and finite");
    }
  }
}

void RectifyConfig::validate() const {
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) {
    throw InputError("lambda must be a nonnegative finite number");
  }
}

ModelState mask_baseline(const ModelState& model,
                         const std::vector<std::size_t>& mask) {
  Vector omega = model.flatten();
  for (std::size_t j : mask) {
    if (j >= model.num_params()) {
      throw InputError("mask index " + std::to_string(j) + " out of range");
    }
    omega(static_cast<Eigen::Index>(j)) = 0.0;
  }
  ModelState out = model;
  out.assign(omega);
  out.clear_snapshots();
  return out;
}

double select_threshold(const Vector& ratios, int m_permille) {
  if (ratios.size() == 0) throw InputError("threshold over an empty ratio set");
  if (m_permille < 0) throw InputError("m_permille must be >= 0");
  const auto n = static_cast<std::int64_t>(ratios.size());
  const std::int64_t r =
      std::min<std::int64_t>(n, (m_permille * n + 999) / 1000);
  if (r == 0) return kInf;
  std::vector<double> sorted(ratios.data(), ratios.data() + n);
  std::nth_element(sorted.begin(), sorted.begin() + (r - 1), sorted.end(),
                   std::greater<double>());
  return sorted[r - 1];
}

std::vector<std::size_t> top_ratio_indices(const Vector& ratios,
                                           int m_permille) {
  const double t = select_threshold(ratios, m_permille);
  std::vector<std::size_t> out;
  for (Eigen::Index j = 0; j < ratios.size(); ++j) {
    if (ratios(j) >= t && ratios(j) > 0.0) out.push_back(j);
  }
  return out;
}

EraseResult erase(const ModelState& model, const FisherDiag& f_d,
                  const FisherDiag& f_df, const FisherDiag* f_dk,
                  const EraseConfig& config) {
  config.validate();
  const std::size_t n = model.num_params();
  check_length(f_d.values, n, "F_D");
  check_length(f_df.values, n, "F_Df");
  if (f_dk != nullptr) check_length(f_dk->values, n, "F_Dk");
  if (f_df.subset_size == 0) return unchanged(model);

  EraseResult out = unchanged(model);
  const double eps = config.eps;
  const Vector& fd = f_d.values;
  const Vector& ff = f_df.values;

  const Vector ratio = importance_ratio(ff, fd, eps);
  const double gamma = branch_threshold(ratio, config.m_permille);
  const double a = config.a_override.value_or(gamma);
  out.stats.gamma = gamma;
  out.stats.a = a;

  Vector coef = Vector::Ones(n);
  std::vector<bool> edited(n, false);
  for (std::size_t j = 0; j < n; ++j) {
    if (ratio(j) >= gamma && ratio(j) > 0.0) {
      coef(j) = a * fd(j) / (ff(j) + eps);
      edited[j] = true;
      ++out.stats.branch1_count;
    }
  }

  if (f_dk != nullptr && f_dk->subset_size > 0) {
    const Vector& fk = f_dk->values;
    const Vector joint = product_ratio(ff, fk, fd, eps);
    const double eta = branch_threshold(joint, config.m_permille);
    const double b = config.b_override.value_or(eta);
    out.stats.eta = eta;
    out.stats.b = b;
    for (std::size_t j = 0; j < n; ++j) {
      if (edited[j]) continue;
      if (joint(j) >= eta && joint(j) > 0.0) {
        coef(j) = b * fd(j) * fd(j) / ((ff(j) + eps) * (fk(j) + eps));
        edited[j] = true;
        ++out.stats.branch2_count;
      }
    }
  }

  finish_stats(out.stats, coef, edited);
  out.model.assign(model.flatten().cwiseProduct(coef));
  return out;
}

EraseResult erase_single_subset(const ModelState& model, const FisherDiag& f_d,
                                const FisherDiag& f_di,
                                const EraseConfig& config) {
  return erase(model, f_d, f_di, nullptr, config);
}

Vector rectify_gradient(const RectifyTerms& t) {
  if (t.size_df >= t.size_d) {
    throw InputError("no remaining training nodes to rectify on");
  }
  const auto n = t.grad_d.size();
  Vector sum = static_cast<double>(t.size_d) * t.grad_d;
  if (t.size_df > 0) {
    check_length(t.grad_df, n, "D_f gradient");
    sum -= static_cast<double>(t.size_df) * t.grad_df;
  }
  if (t.size_dk > 0) {
    check_length(t.grad_dk_star, n, "D_k gradient at the original weights");
    check_length(t.grad_dk_hat, n, "D_k gradient at the edited weights");
    sum += static_cast<double>(t.size_dk) * (t.grad_dk_hat - t.grad_dk_star);
  }
  return sum / static_cast<double>(t.size_d - t.size_df);
}

Vector rectify_gradient_single_subset(const Vector& grad_d, std::size_t size_d,
                                      const Vector& grad_di_star,
                                      const Vector& grad_di_hat,
                                      std::size_t size_di) {
  RectifyTerms t;
  t.grad_d = grad_d;
  t.size_d = size_d;
  t.grad_dk_star = grad_di_star;
  t.grad_dk_hat = grad_di_hat;
  t.size_dk = size_di;
  return rectify_gradient(t);
}

const Vector& require_grad_snapshot(const ModelState& model) {
  if (!model.grad_snapshot) {
    throw StateError(
        "model has no grad_snapshot; retrain it with this tool or refresh "
        "its snapshot on the current graph before unlearning");
  }
  check_length(*model.grad_snapshot, model.num_params(), "grad_snapshot");
  return *model.grad_snapshot;
}

ModelState rectify_update(const ModelState& model_hat, const Vector& gradient,
                          const RectifyConfig& config) {
  config.validate();
  check_length(gradient, model_hat.num_params(), "rectify gradient");
  if (!gradient.allFinite()) {
    throw NumericError("rectify gradient has non-finite entries");
  }
  ModelState out = model_hat;
  out.clear_snapshots();
  out.assign(model_hat.flatten() - config.lambda * gradient);
  if (!out.w0.allFinite() || !out.w1.allFinite()) {
    throw NumericError("rectified weights are not finite");
  }
  return out;
}

std::string report_to_json(const UnlearnReport& r) {
  nlohmann::json doc;
  doc["kind"] = std::string(to_string(r.kind));
  doc["request_size"] = r.request_size;
  doc["sizes"] = {{"D", r.size_d},   {"D_f", r.size_df}, {"D_k", r.size_dk},
                  {"D_r", r.size_dr}, {"D_i", r.size_di}};
  doc["gradient_nodes"] = r.gradient_nodes;
  doc["erase"] = {{"num_params", r.erase.num_params},
                  {"branch1_count", r.erase.branch1_count},
                  {"branch2_count", r.erase.branch2_count},
                  {"gamma", number(r.erase.gamma)},
                  {"eta", number(r.erase.eta)},
                  {"a", number(r.erase.a)},
                  {"b", number(r.erase.b)},
                  {"coef_min", r.erase.coef_min},
                  {"coef_mean", r.erase.coef_mean},
                  {"coef_max", r.erase.coef_max}};
  doc["rectify_gradient_norm"] = number(r.rectify_gradient_norm);
  doc["fisher_d_source"] = r.fisher_d_source;
  doc["fisher_mode"] = r.fisher_mode;
  nlohmann::json cfg = {{"m_permille", r.erase_config.m_permille},
                        {"k", r.erase_config.k_hops},
                        {"eps", r.erase_config.eps},
                        {"lambda", r.rectify_config.lambda}};
  cfg["a_override"] = r.erase_config.a_override
                          ? nlohmann::json(*r.erase_config.a_override)
                          : nlohmann::json(nullptr);
  cfg["b_override"] = r.erase_config.b_override
                          ? nlohmann::json(*r.erase_config.b_override)
                          : nlohmann::json(nullptr);
  doc["config"] = std::move(cfg);
  doc["timings_s"] = {{"subsets", r.timings.subsets_s},
                      {"fisher", r.timings.fisher_s},
                      {"erase", r.timings.erase_s},
                      {"removal", r.timings.removal_s},
                      {"rectify", r.timings.rectify_s},
                      {"total", r.timings.total_s}};
  return doc.dump();
}

UnlearnResult unlearn(const ModelState& model, const GraphBundle& graph,
                      const UnlearnRequest& request,
                      const EraseConfig& erase_config,
                      const RectifyConfig& rectify_config,
                      const UnlearnOptions& options) {
  const auto start = Clock::now();
  erase_config.validate();
  rectify_config.validate();
  const Vector& grad_d = require_grad_snapshot(model);
  if (graph.feature_dim() != model.input_dim() ||
      graph.num_classes() != model.num_classes()) {
    throw InputError("model dimensions do not match the graph");
  }
  const NodeSet& train_nodes = graph.train_nodes();
  if (static_cast<std::size_t>(model.train_size) != train_nodes.size()) {
    throw StateError("model snapshot covers " +
                     std::to_string(model.train_size) +
                     " training nodes but the graph has " +
                     std::to_string(train_nodes.size()) +
                     "; refresh the snapshot on this graph");
  }
  validate_request(graph, request);

  UnlearnReport report;
  report.kind = request.kind;
  report.request_size = request.size();
  report.erase_config = erase_config;
  report.rectify_config = rectify_config;
  report.fisher_mode =
      options.fisher_mode == FisherMode::kPerSample ? "per_sample" : "batch";

  auto t = Clock::now();
  NodeSubsets subsets = affected_subgraph(graph, request, erase_config.k_hops);
  const bool node_task = request.kind == RequestKind::kNode;
  const NodeSet touched =
      node_task ? set_union(subsets.d_f, subsets.d_k) : subsets.d_i;
  report.size_d = train_nodes.size();
  report.size_df = subsets.d_f.size();
  report.size_dk = subsets.d_k.size();
  report.size_dr = subsets.d_r.size();
  report.size_di = subsets.d_i.size();
  report.gradient_nodes = touched.size();
  const PropagationMatrix p = build_propagation(graph);
  report.timings.subsets_s = seconds_since(t);

  t = Clock::now();
  const std::size_t num_params = model.num_params();
  const std::vector<int>& labels = graph.labels();
  FisherDiag f_d;
  if (options.fisher_mode == FisherMode::kBatch) {
    f_d = {grad_d.array().square(), SubsetLabel::kD, train_nodes.size()};
    report.fisher_d_source = "snapshot";
  } else if (model.fisher_snapshot && !options.recompute_fisher_d &&
             static_cast<std::size_t>(model.fisher_snapshot->size()) ==
                 num_params) {
    f_d = {*model.fisher_snapshot, SubsetLabel::kD, train_nodes.size()};
    report.fisher_d_source = "snapshot";
  } else {
    f_d = fisher_diag(p, graph.features(), labels, model, train_nodes,
                      SubsetLabel::kD, options.fisher_mode);
    report.fisher_d_source = "recomputed";
  }
  std::optional<GcnEvaluator> star;
  if (!touched.empty()) star.emplace(p, graph.features(), model, touched);
  const GcnEvaluator* star_ptr = star ? &*star : nullptr;
  const FisherMode mode = options.fisher_mode;
  SubsetStats s_df, s_dk, s_di;
  if (node_task) {
    s_df = subset_stats(star_ptr, labels, subsets.d_f, SubsetLabel::kDf, mode,
                        num_params);
    s_dk = subset_stats(star_ptr, labels, subsets.d_k, SubsetLabel::kDk, mode,
                        num_params);
  } else {
    s_di = subset_stats(star_ptr, labels, subsets.d_i, SubsetLabel::kDi, mode,
                        num_params);
  }
  report.timings.fisher_s = seconds_since(t);

  t = Clock::now();
  EraseResult erased =
      node_task
          ? erase(model, f_d, s_df.fisher, &s_dk.fisher, erase_config)
          : erase_single_subset(model, f_d, s_di.fisher, erase_config);
  report.erase = erased.stats;
  report.timings.erase_s = seconds_since(t);

  t = Clock::now();
  RemovalResult removal = remove_request(graph, request);
  const PropagationMatrix p_rest = build_propagation(removal.graph);
  report.timings.removal_s = seconds_since(t);

  t = Clock::now();
  // The shifted subset's gradient at the edited weights on the remaining
  // graph; its gradient at w* on the original graph came with the Fisher
  // pass.
  const NodeSet& shifted = node_task ? subsets.d_k : subsets.d_i;
  Vector grad_hat;
  if (!shifted.empty()) {
    const NodeSet mapped = removal.map(shifted);
    GcnEvaluator hat(p_rest, removal.graph.features(), erased.model, mapped);
    grad_hat = hat.mean_gradient(mapped, removal.graph.labels());
  }
  Vector gradient;
  if (node_task) {
    RectifyTerms terms;
    terms.grad_d = grad_d;
    terms.size_d = train_nodes.size();
    terms.grad_df = std::move(s_df.mean_grad);
    terms.size_df = subsets.d_f.size();
    terms.grad_dk_star = std::move(s_dk.mean_grad);
    terms.grad_dk_hat = std::move(grad_hat);
    terms.size_dk = subsets.d_k.size();
    gradient = rectify_gradient(terms);
  } else {
    gradient = rectify_gradient_single_subset(grad_d, train_nodes.size(),
                                              s_di.mean_grad, grad_hat,
                                              subsets.d_i.size());
  }
  ModelState rectified = rectify_update(erased.model, gradient, rectify_config);
  report.rectify_gradient_norm = gradient.norm();
  report.timings.rectify_s = seconds_since(t);
  report.timings.total_s = seconds_since(start);

  return UnlearnResult{std::move(rectified), std::move(report),
                       std::move(removal), std::move(subsets),
                       std::move(erased.model), std::move(gradient)};
}

AuditRecord theorem_audit(const ModelState& model_star,
                          const ModelState* model_retrained,
                          const FisherDiag& f_d, const FisherDiag& f_df,
                          const FisherDiag& f_dr,
                          const std::vector<std::size_t>& mask, double eps) {
  if (model_retrained == nullptr) {
    throw StateError("theorem audit needs the retrained model");
  }
  const std::size_t n = model_star.num_params();
  if (model_retrained->num_params() != n) {
    throw InputError("retrained model has a different parameter count");
  }
  check_length(f_d.values, n, "F_D");
  check_length(f_df.values, n, "F_Df");
  check_length(f_dr.values, n, "F_Dr");
  if (f_d.subset_size == 0) throw InputError("F_D over an empty training set");

  AuditRecord rec;
  rec.num_params = n;
  rec.size_d = f_d.subset_size;
  rec.size_df = f_df.subset_size;
  rec.size_dr = f_dr.subset_size;
  std::vector<bool> in_mask(n, false);
  for (std::size_t j : mask) {
    if (j >= n) throw InputError("mask index " + std::to_string(j) + " out of range");
    in_mask[j] = true;
  }
  rec.mask_size = std::count(in_mask.begin(), in_mask.end(), true);

  const Vector w = model_star.flatten();
  const Vector w_r = model_retrained->flatten();
  const double frac_f = static_cast<double>(rec.size_df) / rec.size_d;
  const double frac_r = static_cast<double>(rec.size_dr) / rec.size_d;
  double q = 0.0, c1 = 0.0, c2 = 0.0, c3 = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    const double w_hat = in_mask[j] ? 0.0 : w(j);
    q += (w_r(j) - w_hat) * (w_r(j) - w_hat);
    const double b = f_d.values(j) * w(j);
    const double b_r = f_dr.values(j) * w_r(j);
    c1 = std::max(c1, b_r * b_r);
    c2 = std::max(c2, (b_r * frac_f) * (b_r * frac_f));
    const double fd = f_d.values(j) + eps;
    c3 += (b - b_r * frac_r) * (b - b_r * frac_r) * 2.0 / (fd * fd);
  }
  double masked = 0.0, unmasked = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    const double fd = f_d.values(j) + eps;
    const double fr = f_dr.values(j) + eps;
    if (in_mask[j]) {
      masked += 1.0 / (fr * fr);
    } else {
      unmasked += f_df.values(j) * f_df.values(j) / (fd * fd * fr * fr);
    }
  }
  rec.q = q / static_cast<double>(n);
  rec.c1 = c1;
  rec.c2 = c2;
  rec.c3 = c3;
  rec.masked_term = c1 * masked;
  rec.unmasked_term = c2 * unmasked;
  rec.rhs = (rec.masked_term + rec.unmasked_term + c3) / static_cast<double>(n);
  rec.critical_ratio = c2 > 0.0 ? std::sqrt(c1 / c2) : kInf;
  rec.bound_holds = rec.q <= rec.rhs;
  return rec;
}

std::string audit_to_json(const AuditRecord& r) {
  nlohmann::json doc = {{"num_params", r.num_params},
                        {"mask_size", r.mask_size},
                        {"sizes", {{"D", r.size_d}, {"D_f", r.size_df}, {"D_r", r.size_dr}}},
                        {"Q", number(r.q)},
                        {"c1", number(r.c1)},
                        {"c2", number(r.c2)},
                        {"c3", number(r.c3)},
                        {"masked_term", number(r.masked_term)},
                        {"unmasked_term", number(r.unmasked_term)},
                        {"rhs", number(r.rhs)},
                        {"critical_ratio", number(r.critical_ratio)},
                        {"bound_holds", r.bound_holds}};
  return doc.dump();
}

}  // namespace etr
