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

#ifndef ETR_GCN_H_
#define ETR_GCN_H_

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "etr/graph.h"
#include "etr/types.h"

namespace etr {

// Parameters of the two-layer GCN. The flattened parameter vector is
// vec(w0) followed by vec(w1), both row-major.
struct ModelState {
  Matrix w0;  // d x h
  Matrix w1;  // h x C
  // Mean training-loss gradient at these parameters, taken after the last
  // update. Cleared whenever the parameters are edited.
  std::optional<Vector> grad_snapshot;
  // Empirical Fisher diagonal over the training set at these parameters.
  std::optional<Vector> fisher_snapshot;
  int train_size = 0;

  int input_dim() const { return static_cast<int>(w0.rows()); }
  int hidden_dim() const { return static_cast<int>(w0.cols()); }
  int num_classes() const { return static_cast<int>(w1.cols()); }
  std::size_t num_params() const { return w0.size() + w1.size(); }

  Vector flatten() const;
  // Replaces the weights from a flattened vector of matching length.
  void assign(const Vector& omega);
  void clear_snapshots();

  static ModelState zeros(int input_dim, int hidden_dim, int num_classes);
  static ModelState from_flat(int input_dim, int hidden_dim, int num_classes,
                              const Vector& omega);
};

bool weights_equal(const ModelState& a, const ModelState& b);

struct ForwardTrace {
  std::shared_ptr<const Matrix> px;  // P X, n x d
  Matrix pre;                        // P X W0, n x h
  Matrix h1;                         // ReLU(pre)
  Matrix ph1;                        // P H1
  Matrix h2;                         // logits P H1 W1, n x C
  Matrix z;                          // row-wise softmax of h2
};

ForwardTrace forward(const PropagationMatrix& p, const Matrix& x,
                     const ModelState& model);
// Same, reusing a precomputed P X.
ForwardTrace forward_propagated(const PropagationMatrix& p,
                                std::shared_ptr<const Matrix> px,
                                const ModelState& model);

// Numerically stable row-wise softmax.
Matrix softmax_rows(const Matrix& logits);

// Mean of -ln max(z[i][y_i], 1e-12) over `mask`.
double loss(const ForwardTrace& trace, const std::vector<int>& labels,
            const NodeSet& mask);

// Gradient of loss(trace, labels, mask) with respect to the flattened
// parameters. ReLU'(0) is taken as 0.
Vector backward(const PropagationMatrix& p, const Matrix& x,
                const ForwardTrace& trace, const std::vector<int>& labels,
                const NodeSet& mask, const ModelState& model);

// Gradient of -ln z[node][y_node] (no averaging).
Vector per_node_gradient(const PropagationMatrix& p, const Matrix& x,
                         const std::vector<int>& labels,
                         const ModelState& model, NodeId node);

// Argmax per row; ties go to the smallest class id.
std::vector<int> predict(const ForwardTrace& trace);
std::vector<int> predict(const GraphBundle& graph, const ModelState& model);

struct TrainConfig {
  int hidden_dim = 256;
  int epochs = 100;
  double learning_rate = 0.05;
  double weight_decay = 5e-5;
  std::uint64_t seed = 0;
  double init_scale = 1.0;
  // Skip the range checks on learning_rate and weight_decay.
  bool force = false;
  // Also store the training-set Fisher diagonal on the returned model.
  bool store_fisher = true;

  // learning_rate in [1e-4, 1e-1], weight_decay in [0, 1e-2] unless forced.
  void validate() const;
};

// Glorot-uniform weights scaled by init_scale, drawn from a generator seeded
// with `seed`; w0 is filled row-major first, then w1.
ModelState init_model(int input_dim, int hidden_dim, int num_classes,
                      std::uint64_t seed, double init_scale = 1.0);

// Full-batch gradient descent with L2 weight decay on the training nodes.
// Throws DivergenceError if the loss turns non-finite. The returned model
// carries grad_snapshot (and fisher_snapshot when requested) evaluated at the
// final parameters. Optionally records the loss before each update.
ModelState train(const GraphBundle& graph, const TrainConfig& config,
                 std::vector<double>* loss_history = nullptr);

// Recomputes the snapshots of `model` on `graph`'s training nodes, e.g.
// before chaining a second unlearning request.
void refresh_snapshots(ModelState& model, const GraphBundle& graph,
                       bool with_fisher = true);

// Forward state for per-node gradient work. The full-graph form wraps a
// ForwardTrace; the targeted form evaluates only the rows that the
// predictions and gradients of `targets` depend on (their two-hop receptive
// field), so its cost scales with the targets rather than the graph.
//
// Holds references to `p` and `model`; both must outlive the evaluator.
class GcnEvaluator {
 public:
  GcnEvaluator(const PropagationMatrix& p, ForwardTrace trace,
               const ModelState& model);
  GcnEvaluator(const PropagationMatrix& p, const Matrix& x,
               const ModelState& model, const NodeSet& targets);

  bool covers(NodeId node) const;
  std::size_t num_params() const { return model_.num_params(); }
  // Nodes whose loss the evaluator can differentiate.
  const NodeSet& targets() const { return targets_; }

  // Writes the gradient of -ln z[node][label] into `out`.
  void node_gradient(NodeId node, int label, std::span<double> out) const;

  // Adds sum_i g_i into *sum and sum_i g_i^2 (elementwise) into *sum_sq over
  // `nodes`, where g_i is the per-node gradient. Either output may be null.
  void accumulate(const NodeSet& nodes, const std::vector<int>& labels,
                  Vector* sum, Vector* sum_sq) const;

  // Mean loss gradient over `nodes` via the batched backward pass.
  Vector mean_gradient(const NodeSet& nodes,
                       const std::vector<int>& labels) const;

  double mean_loss(const NodeSet& nodes, const std::vector<int>& labels) const;

 private:
  int target_row(NodeId node) const;

  const PropagationMatrix& p_;
  const ModelState& model_;
  NodeSet targets_;
  std::vector<int> field_row_;   // node -> row of px_/pre_, or -1
  std::vector<int> target_row_;  // node -> row of ph1_/z_, or -1
  std::shared_ptr<const Matrix> px_;
  Matrix pre_;
  Matrix ph1_;
  Matrix z_;
};

}  // namespace etr

#endif  // ETR_GCN_H_
