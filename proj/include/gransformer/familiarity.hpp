#pragma once

#include <vector>

#include "gransformer/graph.hpp"
#include "gransformer/tensor.hpp"

namespace gransformer {

// Autoregressive walk counts. mats[k](i,j) counts walks of length k from i to
// j that stay inside the prefix {0..j}; the recursion M_k = tri_up(A * M_{k-1})
// with M_0 = I makes column j depend only on edges among the first j+1 nodes.
// Counts are doubles (exact integers until far beyond desk scale) saturated at
// 1e300 before the log1p transform.
struct PathCountStack {
  int n = 0;
  int k_max = 0;
  std::vector<std::vector<double>> mats;  // k_max+1 flat n*n matrices
  std::vector<std::vector<float>> logs;   // g_k = log1p(m_k)

  double count(int k, int i, int j) const {
    return mats[k][static_cast<size_t>(i) * n + j];
  }
  float g(int k, int i, int j) const {
    return logs[k][static_cast<size_t>(i) * n + j];
  }
};

PathCountStack path_counts(const Graph& g, int n_k);

// Two-layer perceptron (ReLU then linear) whose sigmoid output is the
// familiarity K(i,j). Each encoder layer owns a distinct set.
struct FamiliarityNet {
  TensorPtr w1, b1, w2, b2;  // (n_k+1) x hidden, hidden, hidden x 1, 1
};

// Positional nets: f2 maps a zero-padded walk-count column (width n_max) to a
// scalar in (0,1) via ReLU then sigmoid; f1 linearly maps the n_k+1 scalars to
// a d_hidden vector.
struct PositionalNets {
  TensorPtr f2_w1, f2_b1, f2_w2, f2_b2;
  TensorPtr f1_w, f1_b;
};

FamiliarityNet make_familiarity_net(const std::string& prefix, int n_k,
                                    int hidden, Rng& rng);
PositionalNets make_positional_nets(const std::string& prefix, int n_k,
                                    int n_max, int hidden, int d_hidden,
                                    Rng& rng);

// Applies net + sigmoid to rows of g-vectors (rows x (n_k+1)) -> rows x 1.
TensorPtr apply_familiarity_net(Tape& tape, const TensorPtr& g_rows,
                                const FamiliarityNet& net);

// K as an n x n matrix, entry (i,j) = sigmoid(f(g_0(i,j)..g_k(i,j))). Entries
// with i > j all share one constant per layer since their counts are zero.
TensorPtr familiarity_matrix(Tape& tape, const PathCountStack& stack,
                             const FamiliarityNet& net);

// Row j is the positional encoding of node j (width d_hidden).
TensorPtr positional_encoding(Tape& tape, const PathCountStack& stack,
                              const PositionalNets& nets, int n_max);

// Exponential-enumeration oracle for path_counts. Refuses k > 8 or n > 12.
long long brute_force_walk_counts(const Graph& g, int i, int j, int k);

}  // namespace gransformer
