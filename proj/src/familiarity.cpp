#include "gransformer/familiarity.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace gransformer {
namespace {

constexpr double kCountSaturation = 1e300;

long long walks_from(const Graph& g, int cur, int steps_left, int target) {
  if (steps_left == 0) {
    return cur == target ? 1 : 0;
  }
  long long total = 0;
  for (int nb : g.neighbors(cur)) {
    if (nb <= target) {
      total += walks_from(g, nb, steps_left - 1, target);
    }
  }
  return total;
}

}  // namespace

PathCountStack path_counts(const Graph& g, int n_k) {
  if (n_k < 0) {
    throw std::invalid_argument("path_counts: n_k must be nonnegative");
  }
  const int n = g.n();
  const size_t nn = static_cast<size_t>(n) * n;
  PathCountStack stack;
  stack.n = n;
  stack.k_max = n_k;
  stack.mats.assign(n_k + 1, std::vector<double>(nn, 0.0));
  stack.logs.assign(n_k + 1, std::vector<float>(nn, 0.0f));

  for (int i = 0; i < n; ++i) {
    stack.mats[0][static_cast<size_t>(i) * n + i] = 1.0;
  }
  for (int k = 1; k <= n_k; ++k) {
    const auto& prev = stack.mats[k - 1];
    auto& cur = stack.mats[k];
    for (int i = 0; i < n; ++i) {
      for (int j = i; j < n; ++j) {
        double acc = 0.0;
        for (int w : g.neighbors(i)) {
          acc += prev[static_cast<size_t>(w) * n + j];
        }
        cur[static_cast<size_t>(i) * n + j] =
            acc > kCountSaturation ? kCountSaturation : acc;
      }
    }
  }
  for (int k = 0; k <= n_k; ++k) {
    for (size_t e = 0; e < nn; ++e) {
      stack.logs[k][e] = static_cast<float>(std::log1p(stack.mats[k][e]));
    }
  }
  return stack;
}

FamiliarityNet make_familiarity_net(const std::string& prefix, int n_k,
                                    int hidden, Rng& rng) {
  FamiliarityNet net;
  const float s1 = 1.0f / std::sqrt(static_cast<float>(n_k + 1));
  const float s2 = 1.0f / std::sqrt(static_cast<float>(hidden));
  net.w1 = make_param(prefix + ".w1", n_k + 1, hidden, rng, s1);
  net.b1 = make_bias_param(prefix + ".b1", hidden);
  net.w2 = make_param(prefix + ".w2", hidden, 1, rng, s2);
  net.b2 = make_param(prefix + ".b2", 1, 1, rng, 0.0f);
  return net;
}

PositionalNets make_positional_nets(const std::string& prefix, int n_k,
                                    int n_max, int hidden, int d_hidden,
                                    Rng& rng) {
  PositionalNets nets;
  const float s1 = 1.0f / std::sqrt(static_cast<float>(n_max));
  const float s2 = 1.0f / std::sqrt(static_cast<float>(hidden));
  const float s3 = 1.0f / std::sqrt(static_cast<float>(n_k + 1));
  nets.f2_w1 = make_param(prefix + ".f2.w1", n_max, hidden, rng, s1);
  nets.f2_b1 = make_bias_param(prefix + ".f2.b1", hidden);
  nets.f2_w2 = make_param(prefix + ".f2.w2", hidden, 1, rng, s2);
  nets.f2_b2 = make_param(prefix + ".f2.b2", 1, 1, rng, 0.0f);
  nets.f1_w = make_param(prefix + ".f1.w", n_k + 1, d_hidden, rng, s3);
  nets.f1_b = make_param(prefix + ".f1.b", 1, d_hidden, rng, 0.0f);
  return nets;
}

TensorPtr apply_familiarity_net(Tape& tape, const TensorPtr& g_rows,
                                const FamiliarityNet& net) {
  TensorPtr z = tape.relu(tape.add_rowwise(tape.matmul(g_rows, net.w1), net.b1));
  return tape.sigmoid(tape.add_rowwise(tape.matmul(z, net.w2), net.b2));
}

TensorPtr familiarity_matrix(Tape& tape, const PathCountStack& stack,
                             const FamiliarityNet& net) {
  const int n = stack.n;
  const int width = stack.k_max + 1;
  TensorPtr g_rows = make_tensor(n * n, width, false);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      for (int k = 0; k < width; ++k) {
        g_rows->data[static_cast<size_t>(i * n + j) * width + k] =
            stack.g(k, i, j);
      }
    }
  }
  g_rows->name = "familiarity.g";
  TensorPtr flat = apply_familiarity_net(tape, g_rows, net);
  return tape.reshape(flat, n, n);
}

TensorPtr positional_encoding(Tape& tape, const PathCountStack& stack,
                              const PositionalNets& nets, int n_max) {
  const int n = stack.n;
  if (n > n_max) {
    throw data_error("positional_encoding: graph has " + std::to_string(n) +
                     " nodes, capacity is " + std::to_string(n_max));
  }
  const int width = stack.k_max + 1;
  TensorPtr cols = make_tensor(n * width, n_max, false);
  for (int j = 0; j < n; ++j) {
    for (int k = 0; k < width; ++k) {
      float* row = cols->data.data() +
                   static_cast<size_t>(j * width + k) * n_max;
      for (int i = 0; i <= j; ++i) {
        row[i] = stack.g(k, i, j);
      }
    }
  }
  cols->name = "positional.g";
  TensorPtr z = tape.relu(
      tape.add_rowwise(tape.matmul(cols, nets.f2_w1), nets.f2_b1));
  TensorPtr h = tape.sigmoid(
      tape.add_rowwise(tape.matmul(z, nets.f2_w2), nets.f2_b2));
  TensorPtr per_node = tape.reshape(h, n, width);
  return tape.add_rowwise(tape.matmul(per_node, nets.f1_w), nets.f1_b);
}

long long brute_force_walk_counts(const Graph& g, int i, int j, int k) {
  if (k > 8 || g.n() > 12) {
    throw std::invalid_argument(
        "brute_force_walk_counts: limited to k <= 8 and n <= 12");
  }
  if (i < 0 || j < 0 || i >= g.n() || j >= g.n() || k < 0) {
    throw std::invalid_argument("brute_force_walk_counts: index out of range");
  }
  if (i > j) {
    return 0;
  }
  return walks_from(g, i, k, j);
}

}  // namespace gransformer
