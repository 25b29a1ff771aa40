#include "gransformer/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include "gransformer/common.hpp"

namespace gransformer {

namespace {

// Orbit labels for each connected 4-node graphlet, looked up by the degree of
// the node inside the induced subgraph. Degree separates the orbits within
// every one of these graphlets, so no further structure is needed.
void accumulate_orbits(const Graph& g, const int s[4],
                       std::vector<long long>* per_node) {
  int deg[4] = {0, 0, 0, 0};
  int edges = 0;
  for (int i = 0; i < 4; ++i) {
    for (int j = i + 1; j < 4; ++j) {
      if (g.has_edge(s[i], s[j])) {
        ++deg[i];
        ++deg[j];
        ++edges;
      }
    }
  }

  int by_degree[4] = {-1, -1, -1, -1};  // orbit for local degree 1, 2, 3
  switch (edges) {
    case 3: {
      const bool star = deg[0] == 3 || deg[1] == 3 || deg[2] == 3 || deg[3] == 3;
      if (star) {
        by_degree[1] = 6;
        by_degree[3] = 7;
      } else {
        by_degree[1] = 4;
        by_degree[2] = 5;
      }
      break;
    }
    case 4: {
      const bool cycle = deg[0] == 2 && deg[1] == 2 && deg[2] == 2 && deg[3] == 2;
      if (cycle) {
        by_degree[2] = 8;
      } else {
        by_degree[1] = 9;
        by_degree[2] = 10;
        by_degree[3] = 11;
      }
      break;
    }
    case 5:
      by_degree[2] = 12;
      by_degree[3] = 13;
      break;
    case 6:
      by_degree[3] = 14;
      break;
    default:
      return;  // unreachable: the walk only yields connected subgraphs
  }

  for (int i = 0; i < 4; ++i) {
    const int orbit = by_degree[deg[i]];
    if (orbit < 0) {
      throw data_error("orbit counts: subgraph walk yielded an unclassifiable subset");
    }
    (*per_node)[static_cast<size_t>(s[i]) * kOrbitCount + orbit] += 1;
  }
}

// Connected-subgraph walk: grow from each root using only exclusive
// neighbors with larger index, so every connected induced 4-node subgraph is
// visited exactly once.
void extend_subgraph(const Graph& g, std::vector<int>& sub,
                     std::vector<int> ext, int root,
                     std::vector<long long>* per_node) {
  if (sub.size() == 4) {
    const int s[4] = {sub[0], sub[1], sub[2], sub[3]};
    accumulate_orbits(g, s, per_node);
    return;
  }
  while (!ext.empty()) {
    const int w = ext.back();
    ext.pop_back();

    std::vector<int> next = ext;
    for (int u : g.neighbors(w)) {
      if (u <= root) continue;
      bool claimed = false;
      for (int v : sub) {
        if (u == v || g.has_edge(u, v)) {
          claimed = true;
          break;
        }
      }
      if (claimed || std::find(next.begin(), next.end(), u) != next.end()) {
        continue;
      }
      next.push_back(u);
    }

    sub.push_back(w);
    extend_subgraph(g, sub, std::move(next), root, per_node);
    sub.pop_back();
  }
}

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

std::vector<double> gaussian_kernels(const std::vector<std::vector<double>>& x,
                                     const std::vector<std::vector<double>>& y,
                                     const DistanceFn& dist, double sigma) {
  std::vector<double> vals;
  vals.reserve(x.size() * y.size());
  const double denom = 2.0 * sigma * sigma;
  for (const auto& a : x) {
    for (const auto& b : y) {
      const double d = dist(a, b);
      vals.push_back(std::exp(-(d * d) / denom));
    }
  }
  std::sort(vals.begin(), vals.end());
  return vals;
}

double sorted_mean(std::vector<double> vals) {
  double total = 0.0;
  for (double v : vals) total += v;
  return total / static_cast<double>(vals.size());
}

// Pooled per-dimension standardization; flat dimensions collapse to zero so
// they do not fake distance.
std::vector<std::vector<double>> standardize_pooled(
    std::vector<std::vector<double>> rows) {
  if (rows.empty()) return rows;
  const size_t dims = rows[0].size();
  for (size_t d = 0; d < dims; ++d) {
    double mean = 0.0;
    for (const auto& r : rows) mean += r[d];
    mean /= static_cast<double>(rows.size());
    double var = 0.0;
    for (const auto& r : rows) var += (r[d] - mean) * (r[d] - mean);
    var /= static_cast<double>(rows.size());
    const double sd = std::sqrt(var);
    for (auto& r : rows) {
      r[d] = sd > 0.0 ? (r[d] - mean) / sd : 0.0;
    }
  }
  return rows;
}

}  // namespace

std::vector<double> degree_histogram(const Graph& g) {
  const int n = g.n();
  std::vector<double> hist(static_cast<size_t>(n), 0.0);
  for (int v = 0; v < n; ++v) {
    hist[static_cast<size_t>(g.degree(v))] += 1.0;
  }
  for (double& h : hist) h /= static_cast<double>(n);
  return hist;
}

std::vector<double> clustering_histogram(const Graph& g) {
  const int n = g.n();
  std::vector<double> hist(kClusteringBins, 0.0);
  for (int v = 0; v < n; ++v) {
    const auto& nbrs = g.neighbors(v);
    const int deg = static_cast<int>(nbrs.size());
    double c = 0.0;
    if (deg >= 2) {
      int tri = 0;
      for (size_t i = 0; i < nbrs.size(); ++i) {
        for (size_t j = i + 1; j < nbrs.size(); ++j) {
          if (g.has_edge(nbrs[i], nbrs[j])) ++tri;
        }
      }
      c = 2.0 * tri / (static_cast<double>(deg) * (deg - 1));
    }
    const int bin = std::min(kClusteringBins - 1,
                             static_cast<int>(c * kClusteringBins));
    hist[static_cast<size_t>(bin)] += 1.0;
  }
  for (double& h : hist) h /= static_cast<double>(n);
  return hist;
}

std::vector<double> orbit_counts(const Graph& g) {
  const int n = g.n();
  if (n > kOrbitNodeCap) {
    throw data_error("orbit counts: graph has " + std::to_string(n) +
                     " nodes, cap is " + std::to_string(kOrbitNodeCap));
  }
  std::vector<long long> per_node(static_cast<size_t>(n) * kOrbitCount, 0);
  std::vector<int> sub;
  for (int v = 0; v < n; ++v) {
    sub.assign(1, v);
    std::vector<int> ext;
    for (int u : g.neighbors(v)) {
      if (u > v) ext.push_back(u);
    }
    extend_subgraph(g, sub, std::move(ext), v, &per_node);
  }

  std::vector<double> mean(kOrbitCount, 0.0);
  for (int v = 0; v < n; ++v) {
    for (int o = 0; o < kOrbitCount; ++o) {
      mean[static_cast<size_t>(o)] +=
          static_cast<double>(per_node[static_cast<size_t>(v) * kOrbitCount + o]);
    }
  }
  for (double& m : mean) m /= static_cast<double>(n);
  return mean;
}

GraphStatistics compute_statistics(const Graph& g) {
  GraphStatistics s;
  s.degree_hist = degree_histogram(g);
  s.clustering_hist = clustering_histogram(g);
  s.orbit_counts = orbit_counts(g);
  return s;
}

double wasserstein_1(const std::vector<double>& a,
                     const std::vector<double>& b) {
  const size_t len = std::max(a.size(), b.size());
  double cdf_gap = 0.0;
  double total = 0.0;
  for (size_t i = 0; i < len; ++i) {
    const double pa = i < a.size() ? a[i] : 0.0;
    const double pb = i < b.size() ? b[i] : 0.0;
    cdf_gap += pa - pb;
    total += std::abs(cdf_gap);
  }
  return total;
}

double euclidean(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) {
    throw data_error("euclidean: vectors have sizes " +
                     std::to_string(a.size()) + " and " +
                     std::to_string(b.size()));
  }
  double sq = 0.0;
  for (size_t i = 0; i < a.size(); ++i) {
    sq += (a[i] - b[i]) * (a[i] - b[i]);
  }
  return std::sqrt(sq);
}

double median_distance(const std::vector<std::vector<double>>& a,
                       const std::vector<std::vector<double>>& b,
                       const DistanceFn& dist) {
  std::vector<const std::vector<double>*> pool;
  for (const auto& r : a) pool.push_back(&r);
  for (const auto& r : b) pool.push_back(&r);
  if (pool.size() < 2) {
    throw data_error("median distance: need at least 2 points");
  }

  std::vector<double> dists;
  dists.reserve(pool.size() * (pool.size() - 1) / 2);
  for (size_t i = 0; i < pool.size(); ++i) {
    for (size_t j = i + 1; j < pool.size(); ++j) {
      dists.push_back(dist(*pool[i], *pool[j]));
    }
  }
  std::sort(dists.begin(), dists.end());
  const size_t mid = dists.size() / 2;
  const double median = dists.size() % 2 == 1
                            ? dists[mid]
                            : 0.5 * (dists[mid - 1] + dists[mid]);
  return median > 0.0 ? median : 1.0;
}

double mmd_squared(const std::vector<std::vector<double>>& a,
                   const std::vector<std::vector<double>>& b,
                   const DistanceFn& dist, double sigma) {
  if (a.empty() || b.empty()) throw data_error("mmd: empty set");
  if (sigma <= 0.0) throw config_error("mmd: bandwidth must be positive");
  const double within_a = sorted_mean(gaussian_kernels(a, a, dist, sigma));
  const double within_b = sorted_mean(gaussian_kernels(b, b, dist, sigma));
  const double across = sorted_mean(gaussian_kernels(a, b, dist, sigma));
  return within_a + within_b - 2.0 * across;
}

MMDReport evaluate_sets(const std::vector<Graph>& a,
                        const std::vector<Graph>& b) {
  if (a.empty() || b.empty()) throw data_error("mmd: empty graph set");

  std::vector<std::vector<double>> deg_a, deg_b, clu_a, clu_b, orb;
  for (const Graph& g : a) {
    deg_a.push_back(degree_histogram(g));
    clu_a.push_back(clustering_histogram(g));
    orb.push_back(orbit_counts(g));
  }
  for (const Graph& g : b) {
    deg_b.push_back(degree_histogram(g));
    clu_b.push_back(clustering_histogram(g));
    orb.push_back(orbit_counts(g));
  }

  orb = standardize_pooled(std::move(orb));
  std::vector<std::vector<double>> orb_a(orb.begin(), orb.begin() + a.size());
  std::vector<std::vector<double>> orb_b(orb.begin() + a.size(), orb.end());

  MMDReport report;
  report.n_a = static_cast<int>(a.size());
  report.n_b = static_cast<int>(b.size());

  const DistanceFn w1 = wasserstein_1;
  report.degree.sigma = median_distance(deg_a, deg_b, w1);
  report.degree.mmd2 = mmd_squared(deg_a, deg_b, w1, report.degree.sigma);
  report.clustering.sigma = median_distance(clu_a, clu_b, w1);
  report.clustering.mmd2 =
      mmd_squared(clu_a, clu_b, w1, report.clustering.sigma);

  const DistanceFn l2 = euclidean;
  report.orbit.sigma = median_distance(orb_a, orb_b, l2);
  report.orbit.mmd2 = mmd_squared(orb_a, orb_b, l2, report.orbit.sigma);
  return report;
}

std::string report_text(const MMDReport& report) {
  std::string out;
  out += "degree_mmd2=" + format_double(report.degree.mmd2) + "\n";
  out += "degree_sigma=" + format_double(report.degree.sigma) + "\n";
  out += "clustering_mmd2=" + format_double(report.clustering.mmd2) + "\n";
  out += "clustering_sigma=" + format_double(report.clustering.sigma) + "\n";
  out += "orbit_mmd2=" + format_double(report.orbit.mmd2) + "\n";
  out += "orbit_sigma=" + format_double(report.orbit.sigma) + "\n";
  out += "set_a_size=" + std::to_string(report.n_a) + "\n";
  out += "set_b_size=" + std::to_string(report.n_b) + "\n";
  out += "estimator=biased\n";
  return out;
}

std::string report_csv(const MMDReport& report) {
  const std::string sizes =
      std::to_string(report.n_a) + "," + std::to_string(report.n_b);
  std::string out = "statistic,mmd2,sigma,nA,nB\n";
  out += "degree," + format_double(report.degree.mmd2) + "," +
         format_double(report.degree.sigma) + "," + sizes + "\n";
  out += "clustering," + format_double(report.clustering.mmd2) + "," +
         format_double(report.clustering.sigma) + "," + sizes + "\n";
  out += "orbit," + format_double(report.orbit.mmd2) + "," +
         format_double(report.orbit.sigma) + "," + sizes + "\n";
  return out;
}

}  // namespace gransformer
