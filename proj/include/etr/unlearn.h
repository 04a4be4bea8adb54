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

#ifndef ETR_UNLEARN_H_
#define ETR_UNLEARN_H_

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "etr/fisher.h"
#include "etr/gcn.h"
#include "etr/graph.h"
#include "etr/request.h"

namespace etr {

struct EraseConfig {
  // Per-mille of parameters targeted by each threshold.
  int m_permille = 10;
  int k_hops = 2;
  // Replace the branch prefactors a = gamma and b = eta.
  std::optional<double> a_override;
  std::optional<double> b_override;
  double eps = 1e-12;

  void validate() const;
};

struct RectifyConfig {
  double lambda = 0.4;

  void validate() const;
};

// Counts and multipliers of one Erase call. Coefficient statistics cover the
// edited parameters only and are zero when nothing was edited.
struct EraseStats {
  std::size_t num_params = 0;
  std::size_t branch1_count = 0;
  std::size_t branch2_count = 0;
  // Thresholds actually applied; +inf when the branch selects nothing.
  double gamma = 0.0;
  double eta = 0.0;
  double a = 0.0;
  double b = 0.0;
  double coef_min = 0.0;
  double coef_mean = 0.0;
  double coef_max = 0.0;
};

struct EraseResult {
  ModelState model;
  EraseStats stats;
};

// Zeroes the listed flattened indices; snapshots are cleared. Throws
// InputError for an index >= |omega|.
ModelState mask_baseline(const ModelState& model,
                         const std::vector<std::size_t>& mask);

// r-th largest entry of `ratios` with r = ceil(m_permille * |ratios| / 1000),
// capped at |ratios|. r = 0 yields +inf so that nothing is selected.
double select_threshold(const Vector& ratios, int m_permille);

// Indices whose ratio is >= select_threshold(ratios, m_permille) and > 0.
std::vector<std::size_t> top_ratio_indices(const Vector& ratios,
                                           int m_permille);

// Two-branch Erase. Branch 1 picks ratio F_Df / F_D >= gamma and scales
// w_j by a * F_D / F_Df; branch 2 picks, among the rest, product ratio
// F_Df F_Dk / F_D^2 >= eta and scales by b * F_D^2 / (F_Df F_Dk). All
// denominators carry +eps. A zero threshold is raised to the smallest
// positive ratio, and parameters whose ratio is zero are never selected.
// `f_dk` may be null (no k-hop neighbors), which disables branch 2; an
// f_df with subset_size 0 returns the model unchanged.
EraseResult erase(const ModelState& model, const FisherDiag& f_d,
                  const FisherDiag& f_df, const FisherDiag* f_dk,
                  const EraseConfig& config);

// Branch 1 only, over the affected subset D_i of an edge or feature request.
EraseResult erase_single_subset(const ModelState& model, const FisherDiag& f_d,
                                const FisherDiag& f_di,
                                const EraseConfig& config);

// Mean-gradient pieces for the remaining-data gradient estimate. Vectors of
// empty subsets may be left empty.
struct RectifyTerms {
  Vector grad_d;  // training-set gradient at w*, original graph
  std::size_t size_d = 0;
  Vector grad_df;  // D_f at w*, original graph
  std::size_t size_df = 0;
  Vector grad_dk_star;  // D_k at w*, original graph
  Vector grad_dk_hat;   // D_k at the edited weights, remaining graph
  std::size_t size_dk = 0;
};

// (|D| g_D - |D_f| g_Df - |D_k| g*_Dk + |D_k| g^_Dk) / (|D| - |D_f|).
Vector rectify_gradient(const RectifyTerms& terms);

// (|D| g_D - |D_i| g*_Di + |D_i| g^_Di) / |D|.
Vector rectify_gradient_single_subset(const Vector& grad_d, std::size_t size_d,
                                      const Vector& grad_di_star,
                                      const Vector& grad_di_hat,
                                      std::size_t size_di);

// The stored training gradient, or StateError telling the caller to retrain
// (or refresh the snapshot) first.
const Vector& require_grad_snapshot(const ModelState& model);

// w' = w^ - lambda * gradient. Throws NumericError for a non-finite gradient.
ModelState rectify_update(const ModelState& model_hat, const Vector& gradient,
                          const RectifyConfig& config);

struct UnlearnOptions {
  FisherMode fisher_mode = FisherMode::kPerSample;
  // Ignore a stored fisher_snapshot and recompute F_D over all training
  // nodes.
  bool recompute_fisher_d = false;
};

struct UnlearnTimings {
  double subsets_s = 0.0;
  double fisher_s = 0.0;
  double erase_s = 0.0;
  double removal_s = 0.0;
  double rectify_s = 0.0;
  double total_s = 0.0;
};

struct UnlearnReport {
  RequestKind kind = RequestKind::kNode;
  std::size_t request_size = 0;
  std::size_t size_d = 0;
  std::size_t size_df = 0;
  std::size_t size_dk = 0;
  std::size_t size_dr = 0;
  std::size_t size_di = 0;
  // Training nodes whose loss gradients were evaluated (D_f, D_k or D_i).
  std::size_t gradient_nodes = 0;
  EraseStats erase;
  double rectify_gradient_norm = 0.0;
  // "snapshot" or "recomputed".
  std::string fisher_d_source;
  std::string fisher_mode;
  EraseConfig erase_config;
  RectifyConfig rectify_config;
  UnlearnTimings timings;
};

std::string report_to_json(const UnlearnReport& report);

struct UnlearnResult {
  ModelState model;
  UnlearnReport report;
  // Graph after removal, with the id mapping for node requests.
  RemovalResult removal;
  NodeSubsets subsets;
  // Intermediates kept for evaluation.
  ModelState erased;
  Vector rectify_gradient;
};

// Erase followed by Rectify. Needs the model's grad_snapshot; uses its
// fisher_snapshot for F_D when present. Apart from the stored snapshots only
// nodes in D_f, D_k or D_i (and their receptive fields) are evaluated. The
// returned model carries no snapshots.
UnlearnResult unlearn(const ModelState& model, const GraphBundle& graph,
                      const UnlearnRequest& request,
                      const EraseConfig& erase_config,
                      const RectifyConfig& rectify_config,
                      const UnlearnOptions& options = {});

// Distance diagnostics for masking a parameter set M. Q is the mean squared
// gap between the retrained weights and the masked weights; c1, c2, c3 and
// rhs follow b = F_D w*, b_r = F_Dr w*_r with eps-floored denominators.
struct AuditRecord {
  std::size_t num_params = 0;
  std::size_t mask_size = 0;
  std::size_t size_d = 0;
  std::size_t size_df = 0;
  std::size_t size_dr = 0;
  double q = 0.0;
  double c1 = 0.0;
  double c2 = 0.0;
  double c3 = 0.0;
  double masked_term = 0.0;    // c1 * sum_{j in M} 1 / F_Dr^2
  double unmasked_term = 0.0;  // c2 * sum_{j not in M} F_Df^2 / (F_D F_Dr)^2
  double rhs = 0.0;
  double critical_ratio = 0.0;  // sqrt(c1 / c2)
  bool bound_holds = false;
};

// Throws StateError when `model_retrained` is null.
AuditRecord theorem_audit(const ModelState& model_star,
                          const ModelState* model_retrained,
                          const FisherDiag& f_d, const FisherDiag& f_df,
                          const FisherDiag& f_dr,
                          const std::vector<std::size_t>& mask,
                          double eps = 1e-12);

std::string audit_to_json(const AuditRecord& record);

}  // namespace etr

#endif  // ETR_UNLEARN_H_
