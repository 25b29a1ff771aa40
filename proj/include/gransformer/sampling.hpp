#pragma once

#include <functional>
#include <vector>

#include "gransformer/common.hpp"
#include "gransformer/graph.hpp"
#include "gransformer/model.hpp"

namespace gransformer {

// Empirical distribution over graph sizes. prob[n] is the fraction of
// training graphs with n nodes; index 0 is always zero.
struct NodeSizeDistribution {
  std::vector<double> prob;        // width n_max + 1
  std::vector<double> cumulative;  // same width, last entry exactly 1
};

// From raw counts indexed by n. Throws data_error if the counts are empty,
// negative, all zero, or put mass on n = 0.
NodeSizeDistribution make_size_distribution(const std::vector<double>& counts_by_n);
// From a list of training-set sizes.
NodeSizeDistribution make_size_distribution(const std::vector<int>& sizes, int n_max);

int sample_node_count(const NodeSizeDistribution& d, Rng& rng);

// P(Y_j = 1 | y_1 .. y_{j-1}) for the j-th bit of one adjacency row; the
// prefix argument holds the j-1 bits already decided.
using RowConditional = std::function<double(const std::vector<uint8_t>& prefix)>;

// One row's conditional chain together with the probability of the all-zero
// row, which the constrained law renormalizes away.
struct ConstrainedRowDistribution {
  RowConditional conditional;
  int length = 0;
  double log_p_zero = 0.0;
};

// Walks the zero prefix to accumulate log P(all zeros). The overload takes a
// precomputed value for heads that produce the whole zero chain in one pass.
ConstrainedRowDistribution make_constrained_row(RowConditional conditional,
                                                int length);
ConstrainedRowDistribution make_constrained_row(RowConditional conditional,
                                                int length, double log_p_zero);

// -log of the renormalized row probability: the Bernoulli chain of the true
// row plus log(1 - P(all zeros)). Node 1's row is all zeros by construction
// and contributes 0. Throws data_error on an all-zero row for node_index >= 2.
double row_nll(const std::vector<uint8_t>& row, const std::vector<double>& p,
               double p_zero, int node_index);

// The conditional the constrained sampler actually uses at one step. While
// every earlier bit is zero the plain conditional p_bit is reweighted by
// Z / (Z - P(0)) where Z is the probability of the zero prefix so far; after
// the first one it is p_bit unchanged. Returns exactly 1 when the zero branch
// has no admissible continuation (last bit still all-zero, or Z - P(0)
// underflows). Exposed so tests can chain it into an exact law.
double constrained_conditional(double p_bit, double log_zero_prefix,
                               double log_p_zero, bool prefix_all_zero,
                               bool last_bit);

// Sequential sampler over nonzero rows: one conditional evaluation and at
// most one uniform draw per bit. Forced bits consume no randomness.
std::vector<uint8_t> sample_row(const ConstrainedRowDistribution& dist,
                                Rng& rng);

// Testing oracle: draw from the unconstrained chain, retry on all-zero.
// attempts counts full-row draws; ok goes false if the retry cap (1e6) is
// hit, so callers report instead of spinning on a degenerate table.
struct RejectionSample {
  std::vector<uint8_t> row;
  long attempts = 0;
  bool ok = false;
};
RejectionSample rejection_sample_oracle(const RowConditional& conditional,
                                        int length, Rng& rng);

// Conditionals for the next node of a partially generated sequence: runs the
// encoder once over the prefix, then evaluates the output head per bit.
// n_total is the already-sampled final size, which the head conditions on.
ConstrainedRowDistribution model_row_distribution(const Model& m,
                                                  const SequenceEncoding& prefix,
                                                  int n_total);

// Draws a size, then grows the sequence row by row with the constrained
// sampler. Every node past the first links to a predecessor, so the result
// is connected under any flag combination.
Graph generate_graph(const Model& m, const NodeSizeDistribution& d, Rng& rng);

}  // namespace gransformer
