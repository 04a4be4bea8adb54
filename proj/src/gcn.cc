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

#include "etr/gcn.h"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include "etr/errors.h"

namespace etr {

namespace {

constexpr double kProbFloor = 1e-12;
// Rows of the d x h gradient block processed per pass in accumulate(); two
// 64 x 256 double tiles fit comfortably in L2.
constexpr int kTileRows = 64;

using RowMap = Eigen::Map<Matrix>;
using ConstRowMap = Eigen::Map<const Matrix>;

void check_dims(const PropagationMatrix& p, const Matrix& x,
                const ModelState& model) {
  if (p.size() != x.rows()) {
    throw InputError("propagation matrix is " + std::to_string(p.size()) +
                     " square but features have " + std::to_string(x.rows()) +
                     " rows");
  }
  if (x.cols() != model.w0.rows()) {
    throw InputError("feature dimension " + std::to_string(x.cols()) +
                     " does not match w0 with " +
                     std::to_string(model.w0.rows()) + " rows");
  }
  if (model.w0.cols() != model.w1.rows()) {
    throw InputError("w0 and w1 disagree on the hidden dimension");
  }
}

void check_label(const std::vector<int>& labels, NodeId node, int classes) {
  if (node < 0 || static_cast<std::size_t>(node) >= labels.size()) {
    throw InputError("node id " + std::to_string(node) + " has no label entry");
  }
  int y = labels[node];
  if (y < 0) throw InputError("node " + std::to_string(node) + " is unlabeled");
  if (y >= classes) {
    throw InputError("label " + std::to_string(y) + " of node " +
                     std::to_string(node) + " exceeds the class count");
  }
}

}  // namespace

Vector ModelState::flatten() const {
  Vector omega(num_params());
  std::copy_n(w0.data(), w0.size(), omega.data());
  std::copy_n(w1.data(), w1.size(), omega.data() + w0.size());
  return omega;
}

void ModelState::assign(const Vector& omega) {
  if (static_cast<std::size_t>(omega.size()) != num_params()) {
    throw InputError("parameter vector has length " +
                     std::to_string(omega.size()) + ", model needs " +
                     std::to_string(num_params()));
  }
  std::copy_n(omega.data(), w0.size(), w0.data());
  std::copy_n(omega.data() + w0.size(), w1.size(), w1.data());
}

void ModelState::clear_snapshots() {
  grad_snapshot.reset();
  fisher_snapshot.reset();
}

ModelState ModelState::zeros(int input_dim, int hidden_dim, int num_classes) {
  if (input_dim <= 0 || hidden_dim <= 0 || num_classes <= 0) {
    throw InputError("model dimensions must be positive");
  }
  ModelState model;
  model.w0 = Matrix::Zero(input_dim, hidden_dim);
  model.w1 = Matrix::Zero(hidden_dim, num_classes);
  return model;
}

ModelState ModelState::from_flat(int input_dim, int hidden_dim,
                                 int num_classes, const Vector& omega) {
  ModelState model = zeros(input_dim, hidden_dim, num_classes);
  model.assign(omega);
  return model;
}

bool weights_equal(const ModelState& a, const ModelState& b) {
  return a.w0.rows() == b.w0.rows() && a.w0.cols() == b.w0.cols() &&
         a.w1.rows() == b.w1.rows() && a.w1.cols() == b.w1.cols() &&
         a.w0 == b.w0 && a.w1 == b.w1;
}

Matrix softmax_rows(const Matrix& logits) {
  Matrix z(logits.rows(), logits.cols());
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    const double top = logits.row(i).maxCoeff();
    z.row(i) = (logits.row(i).array() - top).exp();
    z.row(i) /= z.row(i).sum();
  }
  return z;
}

ForwardTrace forward_propagated(const PropagationMatrix& p,
                                std::shared_ptr<const Matrix> px,
                                const ModelState& model) {
  if (model.w0.cols() != model.w1.rows()) {
    throw InputError("w0 and w1 disagree on the hidden dimension");
  }
  if (px->cols() != model.w0.rows() || px->rows() != p.size()) {
    throw InputError("propagated features do not match the model or graph");
  }
  ForwardTrace trace;
  trace.px = std::move(px);
  trace.pre.noalias() = *trace.px * model.w0;
  trace.h1 = trace.pre.cwiseMax(0.0);
  trace.ph1 = p.matrix * trace.h1;
  trace.h2.noalias() = trace.ph1 * model.w1;
  trace.z = softmax_rows(trace.h2);
  return trace;
}

ForwardTrace forward(const PropagationMatrix& p, const Matrix& x,
                     const ModelState& model) {
  check_dims(p, x, model);
  auto px = std::make_shared<const Matrix>(p.matrix * x);
  return forward_propagated(p, std::move(px), model);
}

double loss(const ForwardTrace& trace, const std::vector<int>& labels,
            const NodeSet& mask) {
  if (mask.empty()) throw InputError("loss over an empty node set");
  double total = 0.0;
  for (NodeId i : mask) {
    check_label(labels, i, static_cast<int>(trace.z.cols()));
    total -= std::log(std::max(trace.z(i, labels[i]), kProbFloor));
  }
  return total / static_cast<double>(mask.size());
}

Vector backward(const PropagationMatrix& p, const Matrix& x,
                const ForwardTrace& trace, const std::vector<int>& labels,
                const NodeSet& mask, const ModelState& model) {
  check_dims(p, x, model);
  if (trace.z.rows() != x.rows() || trace.z.cols() != model.w1.cols() ||
      trace.pre.cols() != model.w0.cols()) {
    throw InputError("forward trace does not match the model or graph");
  }
  if (mask.empty()) throw InputError("gradient over an empty node set");
  const double scale = 1.0 / static_cast<double>(mask.size());
  Matrix g2 = Matrix::Zero(trace.z.rows(), trace.z.cols());
  for (NodeId i : mask) {
    check_label(labels, i, static_cast<int>(trace.z.cols()));
    g2.row(i) = trace.z.row(i);
    g2(i, labels[i]) -= 1.0;
    g2.row(i) *= scale;
  }
  Vector grad(model.num_params());
  RowMap d_w0(grad.data(), model.w0.rows(), model.w0.cols());
  RowMap d_w1(grad.data() + model.w0.size(), model.w1.rows(), model.w1.cols());
  d_w1.noalias() = trace.ph1.transpose() * g2;
  Matrix s = p.matrix.transpose() * g2;
  Matrix d_pre;
  d_pre.noalias() = s * model.w1.transpose();
  d_pre = (trace.pre.array() > 0.0).select(d_pre, 0.0);
  d_w0.noalias() = trace.px->transpose() * d_pre;
  return grad;
}

Vector per_node_gradient(const PropagationMatrix& p, const Matrix& x,
                         const std::vector<int>& labels,
                         const ModelState& model, NodeId node) {
  check_dims(p, x, model);
  check_label(labels, node, model.num_classes());
  GcnEvaluator evaluator(p, x, model, NodeSet{node});
  Vector grad(model.num_params());
  evaluator.node_gradient(node, labels[node],
                           {grad.data(), static_cast<std::size_t>(grad.size())});
  return grad;
}

std::vector<int> predict(const ForwardTrace& trace) {
  std::vector<int> out(trace.z.rows());
  for (Eigen::Index i = 0; i < trace.z.rows(); ++i) {
    // maxCoeff returns the first maximal index.
    Eigen::Index best = 0;
    trace.z.row(i).maxCoeff(&best);
    out[i] = static_cast<int>(best);
  }
  return out;
}

std::vector<int> predict(const GraphBundle& graph, const ModelState& model) {
  return predict(forward(build_propagation(graph), graph.features(), model));
}

void TrainConfig::validate() const {
  if (hidden_dim <= 0) throw InputError("hidden_dim must be positive");
  if (epochs < 0) throw InputError("epochs must be >= 0");
  if (!(init_scale > 0.0)) throw InputError("init_scale must be positive");
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
    throw InputError("learning_rate must be a positive finite number");
  }
  if (!(weight_decay >= 0.0) || !std::isfinite(weight_decay)) {
    throw InputError("weight_decay must be a nonnegative finite number");
  }
  if (force) return;
  if (learning_rate < 1e-4 || learning_rate > 1e-1) {
    throw InputError("learning_rate outside [1e-4, 1e-1]; pass force to "
                     "override");
  }
  if (weight_decay > 1e-2) {
    throw InputError("weight_decay outside [0, 1e-2]; pass force to override");
  }
}

ModelState init_model(int input_dim, int hidden_dim, int num_classes,
                      std::uint64_t seed, double init_scale) {
  ModelState model = ModelState::zeros(input_dim, hidden_dim, num_classes);
  std::mt19937_64 rng(seed);
  auto fill = [&](Matrix& w) {
    const double bound =
        init_scale * std::sqrt(6.0 / static_cast<double>(w.rows() + w.cols()));
    std::uniform_real_distribution<double> dist(-bound, bound);
    for (Eigen::Index k = 0; k < w.size(); ++k) w.data()[k] = dist(rng);
  };
  fill(model.w0);
  fill(model.w1);
  return model;
}

ModelState train(const GraphBundle& graph, const TrainConfig& config,
                 std::vector<double>* loss_history) {
  config.validate();
  const NodeSet& train_nodes = graph.train_nodes();
  if (train_nodes.empty()) throw InputError("graph has no training nodes");

  const PropagationMatrix p = build_propagation(graph);
  const Matrix& x = graph.features();
  auto px = std::make_shared<const Matrix>(p.matrix * x);
  ModelState model = init_model(graph.feature_dim(), config.hidden_dim,
                                graph.num_classes(), config.seed,
                                config.init_scale);

  const double lr = config.learning_rate;
  const double decay = config.weight_decay;
  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    ForwardTrace trace = forward_propagated(p, px, model);
    const double value = loss(trace, graph.labels(), train_nodes);
    if (!std::isfinite(value)) throw DivergenceError(epoch, "loss is not finite");
    if (loss_history != nullptr) loss_history->push_back(value);
    Vector grad = backward(p, x, trace, graph.labels(), train_nodes, model);
    if (!grad.allFinite()) {
      throw DivergenceError(epoch, "gradient is not finite");
    }
    ConstRowMap g0(grad.data(), model.w0.rows(), model.w0.cols());
    ConstRowMap g1(grad.data() + model.w0.size(), model.w1.rows(),
                   model.w1.cols());
    model.w0 -= lr * (g0 + decay * model.w0);
    model.w1 -= lr * (g1 + decay * model.w1);
  }

  ForwardTrace trace = forward_propagated(p, px, model);
  if (!std::isfinite(loss(trace, graph.labels(), train_nodes))) {
    throw DivergenceError(config.epochs, "final loss is not finite");
  }
  model.grad_snapshot =
      backward(p, x, trace, graph.labels(), train_nodes, model);
  model.train_size = static_cast<int>(train_nodes.size());
  if (config.store_fisher) {
    GcnEvaluator evaluator(p, std::move(trace), model);
    Vector sum_sq = Vector::Zero(model.num_params());
    evaluator.accumulate(train_nodes, graph.labels(), nullptr, &sum_sq);
    model.fisher_snapshot = sum_sq / static_cast<double>(train_nodes.size());
  }
  return model;
}

void refresh_snapshots(ModelState& model, const GraphBundle& graph,
                       bool with_fisher) {
  const NodeSet& train_nodes = graph.train_nodes();
  if (train_nodes.empty()) throw InputError("graph has no training nodes");
  const PropagationMatrix p = build_propagation(graph);
  ForwardTrace trace = forward(p, graph.features(), model);
  model.grad_snapshot = backward(p, graph.features(), trace, graph.labels(),
                                 train_nodes, model);
  model.train_size = static_cast<int>(train_nodes.size());
  model.fisher_snapshot.reset();
  if (with_fisher) {
    GcnEvaluator evaluator(p, std::move(trace), model);
    Vector sum_sq = Vector::Zero(model.num_params());
    evaluator.accumulate(train_nodes, graph.labels(), nullptr, &sum_sq);
    model.fisher_snapshot = sum_sq / static_cast<double>(train_nodes.size());
  }
}

GcnEvaluator::GcnEvaluator(const PropagationMatrix& p, ForwardTrace trace,
                           const ModelState& model)
    : p_(p), model_(model) {
  const int n = p.size();
  if (trace.z.rows() != n || trace.pre.cols() != model.w0.cols() ||
      trace.z.cols() != model.w1.cols()) {
    throw InputError("forward trace does not match the model or graph");
  }
  targets_.resize(n);
  field_row_.resize(n);
  for (int i = 0; i < n; ++i) targets_[i] = field_row_[i] = i;
  target_row_ = field_row_;
  px_ = std::move(trace.px);
  pre_ = std::move(trace.pre);
  ph1_ = std::move(trace.ph1);
  z_ = std::move(trace.z);
}

GcnEvaluator::GcnEvaluator(const PropagationMatrix& p, const Matrix& x,
                           const ModelState& model, const NodeSet& targets)
    : p_(p), model_(model), targets_(targets) {
  check_dims(p, x, model);
  const int n = p.size();
  normalize(targets_);
  for (NodeId t : targets_) {
    if (t < 0 || t >= n) {
      throw InputError("target node " + std::to_string(t) + " out of range");
    }
  }
  const SparseMatrix& pm = p.matrix;

  // Receptive field of the hidden layer: targets plus their neighbors.
  NodeSet field;
  for (NodeId t : targets_) {
    for (SparseMatrix::InnerIterator it(pm, t); it; ++it) {
      field.push_back(it.col());
    }
  }
  normalize(field);
  field_row_.assign(n, -1);
  for (std::size_t r = 0; r < field.size(); ++r) field_row_[field[r]] = r;
  target_row_.assign(n, -1);
  for (std::size_t r = 0; r < targets_.size(); ++r) {
    target_row_[targets_[r]] = r;
  }

  auto px = std::make_shared<Matrix>(Matrix::Zero(field.size(), x.cols()));
  for (std::size_t r = 0; r < field.size(); ++r) {
    for (SparseMatrix::InnerIterator it(pm, field[r]); it; ++it) {
      px->row(r) += it.value() * x.row(it.col());
    }
  }
  pre_.noalias() = *px * model.w0;
  px_ = std::move(px);

  ph1_ = Matrix::Zero(targets_.size(), model.hidden_dim());
  for (std::size_t r = 0; r < targets_.size(); ++r) {
    for (SparseMatrix::InnerIterator it(pm, targets_[r]); it; ++it) {
      ph1_.row(r) +=
          it.value() * pre_.row(field_row_[it.col()]).cwiseMax(0.0);
    }
  }
  Matrix logits;
  logits.noalias() = ph1_ * model.w1;
  z_ = softmax_rows(logits);
}

bool GcnEvaluator::covers(NodeId node) const {
  return node >= 0 && static_cast<std::size_t>(node) < target_row_.size() &&
         target_row_[node] >= 0;
}

int GcnEvaluator::target_row(NodeId node) const {
  if (!covers(node)) {
    throw InputError("node " + std::to_string(node) +
                     " is outside the evaluated target set");
  }
  return target_row_[node];
}

void GcnEvaluator::node_gradient(NodeId node, int label,
                                 std::span<double> out) const {
  const int t = target_row(node);
  const int d = model_.input_dim();
  const int h = model_.hidden_dim();
  const int c = model_.num_classes();
  if (label < 0 || label >= c) throw InputError("label out of range");
  if (out.size() != model_.num_params()) {
    throw InputError("gradient buffer has the wrong length");
  }
  Eigen::RowVectorXd g = z_.row(t);
  g(label) -= 1.0;

  RowMap d_w1(out.data() + d * h, h, c);
  d_w1.noalias() = ph1_.row(t).transpose() * g;
  const Vector v = model_.w1 * g.transpose();

  RowMap d_w0(out.data(), d, h);
  d_w0.setZero();
  for (SparseMatrix::InnerIterator it(p_.matrix, node); it; ++it) {
    const int r = field_row_[it.col()];
    Eigen::RowVectorXd d_pre =
        (pre_.row(r).array() > 0.0).select(it.value() * v.transpose(), 0.0);
    d_w0.noalias() += px_->row(r).transpose() * d_pre;
  }
}

void GcnEvaluator::accumulate(const NodeSet& nodes,
                              const std::vector<int>& labels, Vector* sum,
                              Vector* sum_sq) const {
  if (sum == nullptr && sum_sq == nullptr) return;
  const int d = model_.input_dim();
  const int h = model_.hidden_dim();
  const int c = model_.num_classes();
  const std::size_t num_params = model_.num_params();
  for (Vector* out : {sum, sum_sq}) {
    if (out != nullptr && static_cast<std::size_t>(out->size()) != num_params) {
      throw InputError("accumulator has the wrong length");
    }
  }

  // Per node: the output-layer gradient directly, and for the first layer
  // the rows d_pre[u] = P[i][u] * (W1 g_i) masked by ReLU'(pre[u]) together
  // with the field row of u. The first-layer gradient of node i is then
  // sum_u px[u]^T d_pre[u].
  std::vector<std::size_t> offsets{0};
  std::vector<int> rows;
  std::vector<double> d_pre_all;
  for (NodeId node : nodes) {
    check_label(labels, node, c);
    const int t = target_row(node);
    Eigen::RowVectorXd g = z_.row(t);
    g(labels[node]) -= 1.0;
    const Vector v = model_.w1 * g.transpose();

    for (int a = 0; a < h; ++a) {
      const double act = ph1_(t, a);
      for (int k = 0; k < c; ++k) {
        const double value = act * g(k);
        const std::size_t j = static_cast<std::size_t>(d) * h + a * c + k;
        if (sum != nullptr) (*sum)(j) += value;
        if (sum_sq != nullptr) (*sum_sq)(j) += value * value;
      }
    }

    for (SparseMatrix::InnerIterator it(p_.matrix, node); it; ++it) {
      const int r = field_row_[it.col()];
      rows.push_back(r);
      for (int b = 0; b < h; ++b) {
        d_pre_all.push_back(pre_(r, b) > 0.0 ? it.value() * v(b) : 0.0);
      }
    }
    offsets.push_back(rows.size());
  }

  // First layer, tiled over rows of the d x h block so the accumulator tile
  // stays cache resident while every node streams through it.
  using ArrayMap = Eigen::Map<Eigen::ArrayXd>;
  using ConstArrayMap = Eigen::Map<const Eigen::ArrayXd>;
  Eigen::ArrayXd row(h);
  const Matrix& px = *px_;
  for (int a0 = 0; a0 < d; a0 += kTileRows) {
    const int a1 = std::min(d, a0 + kTileRows);
    for (std::size_t i = 0; i + 1 < offsets.size(); ++i) {
      for (int a = a0; a < a1; ++a) {
        bool any = false;
        for (std::size_t e = offsets[i]; e < offsets[i + 1]; ++e) {
          const double s = px(rows[e], a);
          if (s == 0.0) continue;
          ConstArrayMap dp(d_pre_all.data() + e * h, h);
          if (!any) {
            row = s * dp;
            any = true;
          } else {
            row += s * dp;
          }
        }
        if (!any) continue;
        const std::size_t base = static_cast<std::size_t>(a) * h;
        if (sum != nullptr) ArrayMap(sum->data() + base, h) += row;
        if (sum_sq != nullptr) ArrayMap(sum_sq->data() + base, h) += row.square();
      }
    }
  }
}

Vector GcnEvaluator::mean_gradient(const NodeSet& nodes,
                                   const std::vector<int>& labels) const {
  if (nodes.empty()) throw InputError("gradient over an empty node set");
  const int c = model_.num_classes();
  const double scale = 1.0 / static_cast<double>(nodes.size());
  Matrix s = Matrix::Zero(pre_.rows(), c);
  Vector grad(model_.num_params());
  RowMap d_w0(grad.data(), model_.w0.rows(), model_.w0.cols());
  RowMap d_w1(grad.data() + model_.w0.size(), model_.w1.rows(), c);
  d_w1.setZero();
  for (NodeId node : nodes) {
    check_label(labels, node, c);
    const int t = target_row(node);
    Eigen::RowVectorXd g = z_.row(t);
    g(labels[node]) -= 1.0;
    g *= scale;
    d_w1.noalias() += ph1_.row(t).transpose() * g;
    // P is symmetric, so row `node` lists the column entries P[u][node].
    for (SparseMatrix::InnerIterator it(p_.matrix, node); it; ++it) {
      s.row(field_row_[it.col()]) += it.value() * g;
    }
  }
  Matrix d_pre;
  d_pre.noalias() = s * model_.w1.transpose();
  d_pre = (pre_.array() > 0.0).select(d_pre, 0.0);
  d_w0.noalias() = px_->transpose() * d_pre;
  return grad;
}

double GcnEvaluator::mean_loss(const NodeSet& nodes,
                               const std::vector<int>& labels) const {
  if (nodes.empty()) throw InputError("loss over an empty node set");
  double total = 0.0;
  for (NodeId node : nodes) {
    check_label(labels, node, model_.num_classes());
    total -= std::log(std::max(z_(target_row(node), labels[node]), kProbFloor));
  }
  return total / static_cast<double>(nodes.size());
}

}  // namespace etr
