#pragma once

#include <functional>
#include <string>
#include <vector>

#include "gransformer/graph.hpp"

namespace gransformer {

inline constexpr int kClusteringBins = 100;
inline constexpr int kOrbitCount = 15;
inline constexpr int kOrbitNodeCap = 500;

// Per-graph summary features. The two histograms are normalized; the orbit
// vector holds mean per-node membership counts over connected induced 4-node
// subgraphs, indexed by the standard orbit numbering for graphlets on up to 4
// nodes. Slots 0..3 belong to the 2- and 3-node graphlets and stay zero here.
struct GraphStatistics {
  std::vector<double> degree_hist;      // length n, degree 0..n-1
  std::vector<double> clustering_hist;  // kClusteringBins bins over [0, 1]
  std::vector<double> orbit_counts;     // kOrbitCount slots
};

std::vector<double> degree_histogram(const Graph& g);

// Local coefficient c(v) = 2 tri(v) / (deg(v) (deg(v) - 1)), zero below
// degree 2; c = 1 lands in the top bin.
std::vector<double> clustering_histogram(const Graph& g);

// Throws data_error above kOrbitNodeCap nodes; the subgraph walk is
// polynomial but not cheap.
std::vector<double> orbit_counts(const Graph& g);

GraphStatistics compute_statistics(const Graph& g);

// First Wasserstein distance between histograms on a shared unit grid; the
// shorter one is zero-padded. Inputs need not be normalized identically, but
// comparing histograms of different mass is on the caller.
double wasserstein_1(const std::vector<double>& a,
                     const std::vector<double>& b);

double euclidean(const std::vector<double>& a, const std::vector<double>& b);

using DistanceFn =
    std::function<double(const std::vector<double>&, const std::vector<double>&)>;

// Median pairwise distance over the pooled sets; 1.0 when every distance is
// zero so the kernel stays defined.
double median_distance(const std::vector<std::vector<double>>& a,
                       const std::vector<std::vector<double>>& b,
                       const DistanceFn& dist);

// Biased estimator with the diagonal kept: mean k(a,a') + mean k(b,b') -
// 2 mean k(a,b) under k(x,y) = exp(-d(x,y)^2 / (2 sigma^2)). Kernel sums
// accumulate in sorted order, so swapping the sets is bitwise neutral and
// identical sets score exactly zero.
double mmd_squared(const std::vector<std::vector<double>>& a,
                   const std::vector<std::vector<double>>& b,
                   const DistanceFn& dist, double sigma);

struct MMDResult {
  double mmd2 = 0.0;
  double sigma = 0.0;
};

struct MMDReport {
  MMDResult degree;
  MMDResult clustering;
  MMDResult orbit;
  int n_a = 0;
  int n_b = 0;
};

// Full pipeline: statistics per graph, median-heuristic bandwidth per
// statistic, Wasserstein ground distance for the histograms and Euclidean
// after pooled per-dimension standardization for the orbit vectors.
MMDReport evaluate_sets(const std::vector<Graph>& a,
                        const std::vector<Graph>& b);

// key=value block, one line per field.
std::string report_text(const MMDReport& report);

// Header plus one row per statistic: statistic,mmd2,sigma,nA,nB.
std::string report_csv(const MMDReport& report);

}  // namespace gransformer
