#include <doctest.h>

#include <algorithm>
#include <deque>
#include <set>

#include "gransformer/common.hpp"
#include "gransformer/graph.hpp"

using namespace gransformer;

namespace {

Graph random_graph(int n, double p, Rng& rng) {
  std::vector<std::pair<int, int>> edges;
  for (int u = 0; u < n; ++u) {
    for (int v = u + 1; v < n; ++v) {
      if (rng.bernoulli(p)) edges.push_back({u, v});
    }
  }
  return Graph(n, edges);
}

Graph random_connected_graph(int n, double p, Rng& rng) {
  for (;;) {
    Graph g = random_graph(n, p, rng);
    if (is_connected(g)) return g;
  }
}

std::vector<int> bfs_levels(const Graph& g, int root) {
  std::vector<int> level(g.n(), -1);
  std::deque<int> queue{root};
  level[root] = 0;
  while (!queue.empty()) {
    int v = queue.front();
    queue.pop_front();
    for (int w : g.neighbors(v)) {
      if (level[w] < 0) {
        level[w] = level[v] + 1;
        queue.push_back(w);
      }
    }
  }
  return level;
}

}  // namespace

TEST_CASE("graph construction normalizes and validates") {
  int dups = 0;
  Graph g(3, {{1, 0}, {0, 1}, {1, 2}}, &dups);
  CHECK(dups == 1);
  CHECK(g.edge_count() == 2);
  CHECK(g.has_edge(0, 1));
  CHECK(g.has_edge(1, 0));
  CHECK_FALSE(g.has_edge(0, 2));
  CHECK(g.degree(1) == 2);

  CHECK_THROWS_AS(Graph(3, {{0, 0}}), data_error);
  CHECK_THROWS_AS(Graph(3, {{0, 3}}), data_error);
  CHECK_THROWS_AS(Graph(0, {}), data_error);
}

TEST_CASE("bfs_order forced cases") {
  Graph path(3, {{0, 1}, {1, 2}});
  CHECK(bfs_order(path, 0, 7) == std::vector<int>{0, 1, 2});
  CHECK(bfs_order(path, 2, 7) == std::vector<int>{2, 1, 0});

  Graph tri(3, {{0, 1}, {1, 2}, {0, 2}});
  for (uint64_t seed = 0; seed < 20; ++seed) {
    auto pi = bfs_order(tri, 1, seed);
    CHECK(pi[0] == 1);
    CHECK(((pi[1] == 0 && pi[2] == 2) || (pi[1] == 2 && pi[2] == 0)));
  }
}

TEST_CASE("bfs_order star visits all six leaf orders across seeds") {
  Graph star(4, {{0, 1}, {0, 2}, {0, 3}});
  std::set<std::vector<int>> orders;
  for (uint64_t seed = 0; seed < 200; ++seed) {
    auto pi = bfs_order(star, 0, seed);
    CHECK(pi[0] == 0);
    orders.insert(pi);
  }
  CHECK(orders.size() == 6);
}

TEST_CASE("bfs_order rejects unreachable nodes") {
  Graph two(4, {{0, 1}, {2, 3}});
  CHECK_THROWS_AS(bfs_order(two, 0, 1), data_error);
}

TEST_CASE("bfs_order is a bijection with nondecreasing levels") {
  Rng rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    int n = 2 + rng.below(12);
    Graph g = random_connected_graph(n, 0.4, rng);
    int root = rng.below(n);
    auto pi = bfs_order(g, root, rng.next_u64());
    std::vector<int> seen(n, 0);
    for (int v : pi) seen[v]++;
    CHECK(std::all_of(seen.begin(), seen.end(), [](int c) { return c == 1; }));
    auto level = bfs_levels(g, root);
    for (size_t i = 1; i < pi.size(); ++i) {
      CHECK(level[pi[i]] >= level[pi[i - 1]]);
    }
  }
}

TEST_CASE("to_sequence on the triangle and capacity error") {
  Graph tri(3, {{0, 1}, {1, 2}, {0, 2}});
  auto s = to_sequence(tri, {0, 1, 2}, 5);
  CHECK(s.rows[0] == std::vector<uint8_t>{0, 0, 0, 0, 0});
  CHECK(s.rows[1] == std::vector<uint8_t>{1, 0, 0, 0, 0});
  CHECK(s.rows[2] == std::vector<uint8_t>{1, 1, 0, 0, 0});
  CHECK_THROWS_AS(to_sequence(tri, {0, 1, 2}, 2), data_error);
}

TEST_CASE("from_sequence rejects support violations") {
  SequenceEncoding s;
  s.pi = {0, 1};
  s.n_max = 3;
  s.rows = {{0, 1, 0}, {1, 0, 0}};
  CHECK_THROWS_AS(from_sequence(s), data_error);
}

TEST_CASE("single node round trip") {
  Graph one(1, {});
  auto s = to_sequence(one, {0}, 4);
  CHECK(s.rows.size() == 1);
  CHECK(s.rows[0] == std::vector<uint8_t>{0, 0, 0, 0});
  Graph back = from_sequence(s);
  CHECK(back.n() == 1);
  CHECK(back.edge_count() == 0);
}

TEST_CASE("sequence round trip over 200 random graphs") {
  Rng rng(17);
  for (int trial = 0; trial < 200; ++trial) {
    int n = 1 + rng.below(10);
    Graph g = random_graph(n, rng.uniform(0.1, 0.8), rng);
    std::vector<int> pi(n);
    for (int i = 0; i < n; ++i) pi[i] = i;
    rng.shuffle(pi);
    auto s = to_sequence(g, pi, n + rng.below(4));
    Graph permuted = apply_permutation(g, pi);
    Graph back = from_sequence(s);
    CHECK(back.n() == permuted.n());
    CHECK(back.edges() == permuted.edges());
  }
}

TEST_CASE("BFS sequences never contain an isolated non-root row") {
  Rng rng(23);
  for (int trial = 0; trial < 100; ++trial) {
    int n = 2 + rng.below(12);
    Graph g = random_connected_graph(n, 0.35, rng);
    auto pi = bfs_order(g, rng.below(n), rng.next_u64());
    auto s = to_sequence(g, pi, n);
    CHECK(std::count(s.rows[0].begin(), s.rows[0].end(), 1) == 0);
    for (int i = 1; i < s.n(); ++i) {
      CHECK(std::count(s.rows[i].begin(), s.rows[i].end(), 1) > 0);
    }
  }
}

TEST_CASE("largest_component basics and flood-fill oracle") {
  Graph tri2(6, {{0, 1}, {1, 2}, {0, 2}, {3, 4}, {4, 5}});
  Graph keep = largest_component(tri2);
  CHECK(keep.n() == 3);
  CHECK(keep.edge_count() == 3);

  Rng rng(31);
  for (int trial = 0; trial < 50; ++trial) {
    Graph g = random_graph(20, 0.08, rng);
    Graph lc = largest_component(g);
    // Oracle: per-node flood fill, take the max size seen.
    int best = 0;
    for (int v = 0; v < g.n(); ++v) {
      std::set<int> comp{v};
      std::deque<int> queue{v};
      while (!queue.empty()) {
        int x = queue.front();
        queue.pop_front();
        for (int w : g.neighbors(x)) {
          if (comp.insert(w).second) queue.push_back(w);
        }
      }
      best = std::max(best, static_cast<int>(comp.size()));
    }
    CHECK(lc.n() == best);
    CHECK(is_connected(lc));
  }
}
