#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "gransformer/common.hpp"

namespace gransformer {

// Simple undirected graph: no self loops, no multi-edges. Keeps both the
// adjacency matrix and sorted neighbor lists since different consumers want
// different views.
class Graph {
 public:
  Graph() = default;
  // Duplicate edges are collapsed; *dup_count, when given, receives how many
  // were dropped (dataset ingestion reports them).
  Graph(int n, const std::vector<std::pair<int, int>>& edges,
        int* dup_count = nullptr);

  int n() const { return n_; }
  int edge_count() const { return static_cast<int>(edges_.size()); }
  const std::vector<std::pair<int, int>>& edges() const { return edges_; }
  const std::vector<int>& neighbors(int v) const { return nbrs_[v]; }
  bool has_edge(int u, int v) const { return adj_[idx(u, v)] != 0; }
  int degree(int v) const { return static_cast<int>(nbrs_[v].size()); }
  const std::vector<uint8_t>& adjacency() const { return adj_; }

 private:
  size_t idx(int u, int v) const {
    return static_cast<size_t>(u) * n_ + v;
  }
  int n_ = 0;
  std::vector<std::pair<int, int>> edges_;  // normalized u < v, sorted
  std::vector<uint8_t> adj_;                // n*n, symmetric, zero diagonal
  std::vector<std::vector<int>> nbrs_;      // sorted
};

// Autoregressive sequence form: pi is the node ordering, rows[i] is the
// (padded) lower-triangular adjacency row of node i under pi.
struct SequenceEncoding {
  std::vector<int> pi;
  std::vector<std::vector<uint8_t>> rows;  // n rows, each n_max wide
  int n_max = 0;

  int n() const { return static_cast<int>(rows.size()); }
};

// Breadth-first order from root; the visit order of each node's neighbors is
// shuffled by the seed, so repeated calls sample among BFS orderings.
// Throws data_error if some node is unreachable from root.
std::vector<int> bfs_order(const Graph& g, int root, uint64_t seed);

SequenceEncoding to_sequence(const Graph& g, const std::vector<int>& pi,
                             int n_max);
Graph from_sequence(const SequenceEncoding& s);

// Relabels g under pi: result adjacency (i,j) = g adjacency (pi[i], pi[j]).
Graph apply_permutation(const Graph& g, const std::vector<int>& pi);

Graph largest_component(const Graph& g);
bool is_connected(const Graph& g);

}  // namespace gransformer
