#pragma once

#include <vector>

#include "gransformer/familiarity.hpp"
#include "gransformer/graph.hpp"
#include "gransformer/made.hpp"
#include "gransformer/tensor.hpp"

namespace gransformer {

enum class MaskMode {
  kMultiplyAfterSoftmax,  // M (.) softmax(M (.) S): zeroed logits, rows sum < 1
  kAdditivePreSoftmax,    // softmax(S - 1e9 (1-M)), then M (.) again
};

struct ModelConfig {
  int n_max = 16;
  int n_k = 16;
  int layers = 2;
  int d_hidden = 64;
  int d_k = 32;
  bool use_dual_attention = true;
  bool use_familiarity = true;
  bool use_graph_pos_enc = true;
  bool use_made = true;
  // Squash the encoder state through a sigmoid before it feeds the output
  // network.
  bool made_input_sigmoid = true;
  MaskMode mask_mode = MaskMode::kMultiplyAfterSoftmax;
  uint64_t made_mask_seed = 9001;

  int fam_hidden() const { return d_hidden / 4 > 0 ? d_hidden / 4 : 1; }
  int cond_width() const { return d_hidden + n_bits_width(n_max); }
  std::vector<int> made_hidden() const { return {2 * n_max, 2 * n_max}; }
  void validate() const;  // throws config_error
};

struct LayerParams {
  TensorPtr wq1, bq1, wk1, bk1, wv1, bv1;
  TensorPtr wq2, bq2, wk2, bk2, wv2, bv2;  // only with dual attention
  TensorPtr ff_w1, ff_b1, ff_w2, ff_b2;
  FamiliarityNet fam;  // only with familiarity
};

struct Model {
  ModelConfig cfg;
  TensorPtr start_embed;           // 1 x d_hidden
  TensorPtr proj_w, proj_b;        // n_max x d_hidden, 1 x d_hidden
  TensorPtr index_embed;           // only without graph positional encoding
  PositionalNets pos;              // only with graph positional encoding
  std::vector<LayerParams> layers;
  MadeMasks made_masks;            // only with the MADE head
  MadeParams made;
  TensorPtr bern_w, bern_b;        // independent-Bernoulli ablation head
  // Empirical node-count histogram (width n_max); filled by training, stored
  // in checkpoints, consumed by generation. Not a trainable parameter.
  TensorPtr size_histogram;
};

Model make_model(const ModelConfig& cfg, uint64_t param_seed);
// Trainable parameters in a fixed traversal order.
std::vector<TensorPtr> model_params(const Model& m);

// Per-(graph, ordering) constants shared by every layer and the loss. The
// encoder always runs at n_max+1 positions so that softmax denominators never
// depend on graph size; padding rows carry the projection bias and are never
// read back.
struct StructureCache {
  int n = 0;
  SequenceEncoding seq;
  PathCountStack stack;
  TensorPtr mask;       // (p,q) = 1 iff q <= p
  TensorPtr mask_bias;  // 0 where visible, -1e9 where masked
  TensorPtr e_edge;     // symmetric edge selector, zero on diagonal/Start/pad
  TensorPtr e_comp;     // 1 - e_edge
  TensorPtr g_ext;      // walk-count inputs for the position-space familiarity
  TensorPtr l_rows;     // (n_max+1) x n_max input rows, Start and padding zero
  TensorPtr pos_place;  // scatters n positional rows into n_max+1 slots
};

StructureCache build_structures(const Model& m, const SequenceEncoding& seq);

TensorPtr embed_inputs(Tape& tape, const Model& m, const StructureCache& sc);

// One attention sublayer without the residual. fam_override substitutes the
// familiarity matrix (tests pass an all-ones tensor to pin the modulation
// identity); null means use the layer's own net, or none if the flag is off.
TensorPtr attention_sublayer(Tape& tape, const TensorPtr& v_in,
                             const StructureCache& sc, const LayerParams& lp,
                             const ModelConfig& cfg,
                             const TensorPtr& fam_override = nullptr);

// Full stack: embeddings, then per layer attention + residual and
// feed-forward + residual. Returns all n_max+1 position vectors.
TensorPtr encoder_forward(Tape& tape, const Model& m,
                          const StructureCache& sc);

// Total sequence NLL: for each node i >= 2, the Bernoulli chain over its
// known predecessors plus the all-zeros renormalization log(1 - P(row = 0)).
// Node 1 contributes nothing. Returns a scalar.
TensorPtr graph_nll(Tape& tape, const Model& m, const StructureCache& sc);

}  // namespace gransformer
