#include "gransformer/graph.hpp"

#include <algorithm>
#include <deque>
#include <set>
#include <string>

namespace gransformer {

Graph::Graph(int n, const std::vector<std::pair<int, int>>& edges,
             int* dup_count) {
  if (n <= 0) throw data_error("Graph: node count must be positive");
  n_ = n;
  adj_.assign(static_cast<size_t>(n) * n, 0);
  nbrs_.assign(n, {});
  int dups = 0;
  std::set<std::pair<int, int>> seen;
  for (auto [u, v] : edges) {
    if (u == v) {
      throw data_error("Graph: self loop at node " + std::to_string(u));
    }
    if (u < 0 || v < 0 || u >= n || v >= n) {
      throw data_error("Graph: edge (" + std::to_string(u) + "," +
                       std::to_string(v) + ") outside 0.." + std::to_string(n - 1));
    }
    if (u > v) std::swap(u, v);
    if (!seen.insert({u, v}).second) {
      ++dups;
      continue;
    }
    adj_[idx(u, v)] = 1;
    adj_[idx(v, u)] = 1;
  }
  edges_.assign(seen.begin(), seen.end());
  for (auto [u, v] : edges_) {
    nbrs_[u].push_back(v);
    nbrs_[v].push_back(u);
  }
  for (auto& lst : nbrs_) std::sort(lst.begin(), lst.end());
  if (dup_count) *dup_count = dups;
}

std::vector<int> bfs_order(const Graph& g, int root, uint64_t seed) {
  if (root < 0 || root >= g.n()) {
    throw std::invalid_argument("bfs_order: root outside graph");
  }
  Rng rng(seed);
  std::vector<int> order;
  order.reserve(g.n());
  std::vector<uint8_t> visited(g.n(), 0);
  std::deque<int> queue;
  queue.push_back(root);
  visited[root] = 1;
  while (!queue.empty()) {
    int v = queue.front();
    queue.pop_front();
    order.push_back(v);
    std::vector<int> next;
    for (int w : g.neighbors(v)) {
      if (!visited[w]) next.push_back(w);
    }
    rng.shuffle(next);
    for (int w : next) {
      visited[w] = 1;
      queue.push_back(w);
    }
  }
  if (static_cast<int>(order.size()) != g.n()) {
    throw data_error("bfs_order: graph not connected from root " +
                     std::to_string(root));
  }
  return order;
}

SequenceEncoding to_sequence(const Graph& g, const std::vector<int>& pi,
                             int n_max) {
  if (static_cast<int>(pi.size()) != g.n()) {
    throw std::invalid_argument("to_sequence: permutation size mismatch");
  }
  if (g.n() > n_max) {
    throw data_error("to_sequence: graph with " + std::to_string(g.n()) +
                     " nodes exceeds n_max=" + std::to_string(n_max));
  }
  SequenceEncoding s;
  s.pi = pi;
  s.n_max = n_max;
  s.rows.assign(g.n(), std::vector<uint8_t>(n_max, 0));
  for (int i = 0; i < g.n(); ++i) {
    for (int j = 0; j < i; ++j) {
      s.rows[i][j] = g.has_edge(pi[i], pi[j]) ? 1 : 0;
    }
  }
  return s;
}

Graph from_sequence(const SequenceEncoding& s) {
  const int n = s.n();
  if (n == 0) throw data_error("from_sequence: empty sequence");
  std::vector<std::pair<int, int>> edges;
  for (int i = 0; i < n; ++i) {
    if (static_cast<int>(s.rows[i].size()) != s.n_max) {
      throw data_error("from_sequence: row " + std::to_string(i) +
                       " has wrong width");
    }
    for (int j = 0; j < s.n_max; ++j) {
      if (s.rows[i][j] && j >= i) {
        throw data_error("from_sequence: nonzero entry at (" + std::to_string(i) +
                         "," + std::to_string(j) + ") outside the lower triangle");
      }
      if (s.rows[i][j]) edges.push_back({j, i});
    }
  }
  return Graph(n, edges);
}

Graph apply_permutation(const Graph& g, const std::vector<int>& pi) {
  if (static_cast<int>(pi.size()) != g.n()) {
    throw std::invalid_argument("apply_permutation: size mismatch");
  }
  std::vector<int> pos(g.n());
  for (int i = 0; i < g.n(); ++i) pos[pi[i]] = i;
  std::vector<std::pair<int, int>> edges;
  edges.reserve(g.edges().size());
  for (auto [u, v] : g.edges()) edges.push_back({pos[u], pos[v]});
  return Graph(g.n(), edges);
}

namespace {

std::vector<int> component_of(const Graph& g, int start,
                              std::vector<uint8_t>& visited) {
  std::vector<int> comp;
  std::deque<int> queue{start};
  visited[start] = 1;
  while (!queue.empty()) {
    int v = queue.front();
    queue.pop_front();
    comp.push_back(v);
    for (int w : g.neighbors(v)) {
      if (!visited[w]) {
        visited[w] = 1;
        queue.push_back(w);
      }
    }
  }
  return comp;
}

}  // namespace

Graph largest_component(const Graph& g) {
  if (g.n() == 0) throw data_error("largest_component: empty graph");
  std::vector<uint8_t> visited(g.n(), 0);
  std::vector<int> best;
  for (int v = 0; v < g.n(); ++v) {
    if (!visited[v]) {
      auto comp = component_of(g, v, visited);
      if (comp.size() > best.size()) best = std::move(comp);
    }
  }
  std::sort(best.begin(), best.end());
  std::vector<int> newid(g.n(), -1);
  for (size_t i = 0; i < best.size(); ++i) newid[best[i]] = static_cast<int>(i);
  std::vector<std::pair<int, int>> edges;
  for (auto [u, v] : g.edges()) {
    if (newid[u] >= 0 && newid[v] >= 0) edges.push_back({newid[u], newid[v]});
  }
  return Graph(static_cast<int>(best.size()), edges);
}

bool is_connected(const Graph& g) {
  if (g.n() == 0) return false;
  std::vector<uint8_t> visited(g.n(), 0);
  return static_cast<int>(component_of(g, 0, visited).size()) == g.n();
}

}  // namespace gransformer
