#include "gransformer/synth.hpp"

#include <string>
#include <utility>

namespace gransformer {

Graph grid_graph(int rows, int cols) {
  if (rows < 1 || cols < 1) {
    throw config_error("grid: dimensions must be positive");
  }
  std::vector<std::pair<int, int>> edges;
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      const int v = r * cols + c;
      if (c + 1 < cols) edges.push_back({v, v + 1});
      if (r + 1 < rows) edges.push_back({v, v + cols});
    }
  }
  return Graph(rows * cols, edges);
}

Graph two_community_graph(int n1, int n2, double p_in, double p_out,
                          Rng& rng) {
  if (n1 < 2 || n2 < 2) {
    throw config_error("two communities: block sizes must be at least 2");
  }
  const int n = n1 + n2;
  for (int attempt = 0; attempt < 200; ++attempt) {
    std::vector<std::pair<int, int>> edges;
    int cross = 0;
    for (int u = 0; u < n; ++u) {
      for (int v = u + 1; v < n; ++v) {
        const bool same = (u < n1) == (v < n1);
        if (rng.uniform() < (same ? p_in : p_out)) {
          edges.push_back({u, v});
          if (!same) ++cross;
        }
      }
    }
    if (cross == 0) {
      edges.push_back({static_cast<int>(rng.below(n1)),
                       n1 + static_cast<int>(rng.below(n2))});
    }
    Graph g(n, edges);
    if (is_connected(g)) return g;
  }
  throw data_error("two communities: no connected sample in 200 attempts");
}

std::vector<Graph> synthetic_set(int count, int n_lo, int n_hi, Rng& rng) {
  if (n_lo < 6 || n_hi < n_lo) {
    throw config_error("synthetic set: need 6 <= n_lo <= n_hi, got [" +
                       std::to_string(n_lo) + ", " + std::to_string(n_hi) +
                       "]");
  }
  std::vector<std::pair<int, int>> shapes;
  for (int r = 2; r * r <= n_hi; ++r) {
    for (int c = r; r * c <= n_hi; ++c) {
      if (r * c >= n_lo) shapes.push_back({r, c});
    }
  }
  if (shapes.empty()) {
    throw config_error("synthetic set: no grid fits [" + std::to_string(n_lo) +
                       ", " + std::to_string(n_hi) + "]");
  }

  std::vector<Graph> out;
  out.reserve(static_cast<size_t>(count));
  for (int i = 0; i < count; ++i) {
    if (i % 2 == 0) {
      const auto [r, c] = shapes[static_cast<size_t>(
          rng.below(static_cast<int>(shapes.size())))];
      out.push_back(grid_graph(r, c));
    } else {
      const int n = n_lo + static_cast<int>(rng.below(n_hi - n_lo + 1));
      const int n1 = 3 + static_cast<int>(rng.below(n - 5));
      out.push_back(two_community_graph(n1, n - n1, 0.7, 0.1, rng));
    }
  }
  return out;
}

}  // namespace gransformer
