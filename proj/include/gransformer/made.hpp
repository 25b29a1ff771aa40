#pragma once

#include <vector>

#include "gransformer/tensor.hpp"

namespace gransformer {

// Masks for the autoregressive output network. Input layout is the target row
// (n_max units, tagged 1..n_max) followed by conditioning units (encoder state
// and the bits of n, all tagged 0). Hidden tags are drawn once per run from
// {1..n_max-1}; connections use tag(u) <= tag(w) between hidden layers and
// strict < into the outputs and across the direct input-output links, so no
// path can carry target bit j into output j or earlier.
struct MadeMasks {
  int n_max = 0;
  int cond_width = 0;
  std::vector<int> hidden_sizes;
  std::vector<int> input_tags;
  std::vector<std::vector<int>> hidden_tags;
  std::vector<TensorPtr> layer_masks;  // input->h1, h1->h2, ...
  TensorPtr out_mask;                  // last hidden -> outputs, strict
  TensorPtr direct_mask;               // inputs -> outputs, strict

  int input_width() const { return n_max + cond_width; }
};

struct MadeParams {
  std::vector<TensorPtr> w;  // one per hidden layer
  std::vector<TensorPtr> b;
  TensorPtr w_out, b_out;
  TensorPtr w_direct;

  std::vector<TensorPtr> all() const;
};

MadeMasks build_masks(int n_max, int cond_width,
                      const std::vector<int>& hidden_sizes, uint64_t seed);

// scale_mult 0 gives the symmetric zero initialization (every output 0.5).
MadeParams make_made_params(const std::string& prefix, const MadeMasks& masks,
                            Rng& rng, float scale_mult = 1.0f);

// target: rows x n_max, cond: rows x cond_width. Returns row-wise edge
// probabilities sigmoid(logits), one column per potential predecessor. Masks
// multiply the weights at application time, so they are never trained away.
TensorPtr made_forward(Tape& tape, const TensorPtr& target,
                       const TensorPtr& cond, const MadeMasks& masks,
                       const MadeParams& params);

// q[j] = P(bit j = 0 | bits 1..j-1 = 0), one forward pass with a zero target.
TensorPtr conditionals_for_zero_target(Tape& tape, const TensorPtr& cond,
                                       const MadeMasks& masks,
                                       const MadeParams& params);

// Most-significant-first binary encoding of n, width n_bits_width(n_max).
int n_bits_width(int n_max);
std::vector<float> n_bits(int n, int n_max);

}  // namespace gransformer
