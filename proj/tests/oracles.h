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

// Independent reference implementations used by the tests. Everything here
// is written with plain loops over std::vector so that it shares no code
// with the library beyond the plain data types.

#ifndef ETR_TESTS_ORACLES_H_
#define ETR_TESTS_ORACLES_H_

#include <cstdint>
#include <functional>
#include <random>
#include <vector>

#include <string>

#include "etr/fisher.h"
#include "etr/gcn.h"
#include "etr/graph.h"
#include "etr/unlearn.h"

namespace etr::testing {

using Dense = std::vector<std::vector<double>>;

// D^{-1/2} (A + I) D^{-1/2} built from an edge list.
Dense dense_propagation(int n, const std::vector<Edge>& edges);

struct DenseForward {
  Dense pre, h1, h2, z;
};

// H1 = ReLU(P X W0), H2 = P H1 W1, Z = softmax rows, by triple loops.
DenseForward dense_forward(const Dense& p, const Dense& x, const Dense& w0,
                           const Dense& w1);

// Mean of -ln max(z[i][y_i], 1e-12) over `mask`.
double dense_loss(const DenseForward& f, const std::vector<int>& labels,
                  const std::vector<int>& mask);

// Breadth-first distances from `seeds`; unreachable nodes get -1.
std::vector<int> bfs_distances(int n, const std::vector<Edge>& edges,
                               const std::vector<int>& seeds);

// Central differences of `f` at `omega` with step `h`.
Vector central_differences(const std::function<double(const Vector&)>& f,
                           Vector omega, double h);

Dense to_dense(const Matrix& m);
Dense unflatten(const Vector& v, std::size_t offset, int rows, int cols);

// Random connected-ish graph with n nodes, every node labeled, roughly 70%
// training nodes (at least one), Gaussian features.
GraphBundle random_graph(std::mt19937_64& rng, int n, int d, int classes,
                         double edge_prob);

ModelState random_model(std::mt19937_64& rng, int d, int h, int classes,
                        double scale = 1.0);

// One finite-difference check of backward() against the dense oracle loss:
// draws a random graph (n <= 20) and model whose pre-activations all stay at
// least 1e-3 away from the ReLU kink, then returns the largest per-coordinate
// |analytic - fd| / max(|analytic|, |fd|, floor).
struct GradientCheck {
  double max_rel_error = 0.0;
  int num_nodes = 0;
  std::size_t num_params = 0;
};
GradientCheck gradient_check_instance(std::mt19937_64& rng,
                                      double floor = 1e-4);

// Draws a random graph and model, splits the training nodes at random into
// D_f and D_r, and returns the largest elementwise gap between F_D and
// (|D_f| F_Df + |D_r| F_Dr) / |D|.
double fisher_decomposition_error(std::mt19937_64& rng);

// Random Erase inputs: F_D is the size-weighted mixture of F_Df and F_Dr, so
// F_D >= (|D_f|/|D|) F_Df holds as it does for real Fisher diagonals. About
// a tenth of the entries of each vector are exact zeros.
struct EraseCase {
  ModelState model;
  FisherDiag f_d, f_df, f_dk;
};
EraseCase random_erase_case(std::mt19937_64& rng);

// Checks one random case against a sort-based re-derivation of both
// thresholds: branch membership is disjoint, each edited weight is scaled by
// its branch's multiplier in (0, 1], untouched weights are bit-identical,
// m = 0 and an empty D_f are the identity, and the edit count does not
// decrease from m to a larger m. Returns an empty string on success and a
// description of the first violation otherwise.
std::string erase_invariant_violation(std::mt19937_64& rng);

}  // namespace etr::testing

#endif  // ETR_TESTS_ORACLES_H_
