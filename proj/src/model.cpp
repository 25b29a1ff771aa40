#include "gransformer/model.hpp"

#include <cmath>
#include <string>

namespace gransformer {
namespace {

constexpr float kProbFloor = 1e-7f;

float inv_sqrt(int fan_in) {
  return 1.0f / std::sqrt(static_cast<float>(fan_in));
}

TensorPtr masked_attention(Tape& tape, const TensorPtr& scores,
                           const StructureCache& sc, MaskMode mode) {
  if (mode == MaskMode::kMultiplyAfterSoftmax) {
    return tape.mul(sc.mask, tape.softmax_rows(tape.mul(sc.mask, scores)));
  }
  return tape.mul(sc.mask, tape.softmax_rows(tape.add(scores, sc.mask_bias)));
}

TensorPtr branch_attention(Tape& tape, const TensorPtr& v_in,
                           const StructureCache& sc, const ModelConfig& cfg,
                           const TensorPtr& wq, const TensorPtr& bq,
                           const TensorPtr& wk, const TensorPtr& bk) {
  TensorPtr q = tape.add_rowwise(tape.matmul(v_in, wq), bq);
  TensorPtr k = tape.add_rowwise(tape.matmul(v_in, wk), bk);
  TensorPtr scores = tape.scale(tape.matmul(q, tape.transpose(k)),
                                1.0 / std::sqrt(static_cast<double>(cfg.d_k)));
  return masked_attention(tape, scores, sc, cfg.mask_mode);
}

}  // namespace

void ModelConfig::validate() const {
  if (n_max < 2) throw config_error("model: n_max must be at least 2");
  if (n_k < 0) throw config_error("model: n_k must be nonnegative");
  if (layers < 0) throw config_error("model: layer count must be nonnegative");
  if (d_hidden < 1) throw config_error("model: d_hidden must be positive");
  if (d_k < 1) throw config_error("model: d_k must be positive");
}

Model make_model(const ModelConfig& cfg, uint64_t param_seed) {
  cfg.validate();
  Model m;
  m.cfg = cfg;
  Rng rng(param_seed);
  const int d = cfg.d_hidden;
  m.start_embed = make_param("start_embed", 1, d, rng, inv_sqrt(d));
  m.proj_w = make_param("proj.w", cfg.n_max, d, rng, inv_sqrt(cfg.n_max));
  m.proj_b = make_param("proj.b", 1, d);
  if (cfg.use_graph_pos_enc) {
    m.pos = make_positional_nets("pos", cfg.n_k, cfg.n_max, cfg.fam_hidden(),
                                 d, rng);
  } else {
    m.index_embed =
        make_param("index_embed", cfg.n_max + 1, d, rng, inv_sqrt(d));
  }
  for (int t = 0; t < cfg.layers; ++t) {
    LayerParams lp;
    const std::string p = "layer" + std::to_string(t);
    lp.wq1 = make_param(p + ".wq1", d, cfg.d_k, rng, inv_sqrt(d));
    lp.bq1 = make_param(p + ".bq1", 1, cfg.d_k);
    lp.wk1 = make_param(p + ".wk1", d, cfg.d_k, rng, inv_sqrt(d));
    lp.bk1 = make_param(p + ".bk1", 1, cfg.d_k);
    lp.wv1 = make_param(p + ".wv1", d, d, rng, inv_sqrt(d));
    lp.bv1 = make_param(p + ".bv1", 1, d);
    if (cfg.use_dual_attention) {
      lp.wq2 = make_param(p + ".wq2", d, cfg.d_k, rng, inv_sqrt(d));
      lp.bq2 = make_param(p + ".bq2", 1, cfg.d_k);
      lp.wk2 = make_param(p + ".wk2", d, cfg.d_k, rng, inv_sqrt(d));
      lp.bk2 = make_param(p + ".bk2", 1, cfg.d_k);
      lp.wv2 = make_param(p + ".wv2", d, d, rng, inv_sqrt(d));
      lp.bv2 = make_param(p + ".bv2", 1, d);
    }
    lp.ff_w1 = make_param(p + ".ff.w1", d, 2 * d, rng, inv_sqrt(d));
    lp.ff_b1 = make_bias_param(p + ".ff.b1", 2 * d);
    lp.ff_w2 = make_param(p + ".ff.w2", 2 * d, d, rng, inv_sqrt(2 * d));
    lp.ff_b2 = make_param(p + ".ff.b2", 1, d);
    if (cfg.use_familiarity) {
      lp.fam = make_familiarity_net(p + ".fam", cfg.n_k, cfg.fam_hidden(), rng);
    }
    m.layers.push_back(std::move(lp));
  }
  if (cfg.use_made) {
    m.made_masks = build_masks(cfg.n_max, cfg.cond_width(), cfg.made_hidden(),
                               cfg.made_mask_seed);
    m.made = make_made_params("made", m.made_masks, rng);
  } else {
    m.bern_w = make_param("bern.w", cfg.cond_width(), cfg.n_max, rng,
                          inv_sqrt(cfg.cond_width()));
    m.bern_b = make_param("bern.b", 1, cfg.n_max);
  }
  m.size_histogram = make_tensor(1, cfg.n_max);
  m.size_histogram->name = "size_histogram";
  return m;
}

std::vector<TensorPtr> model_params(const Model& m) {
  std::vector<TensorPtr> out = {m.start_embed, m.proj_w, m.proj_b};
  if (m.cfg.use_graph_pos_enc) {
    out.insert(out.end(), {m.pos.f2_w1, m.pos.f2_b1, m.pos.f2_w2, m.pos.f2_b2,
                           m.pos.f1_w, m.pos.f1_b});
  } else {
    out.push_back(m.index_embed);
  }
  for (const auto& lp : m.layers) {
    out.insert(out.end(),
               {lp.wq1, lp.bq1, lp.wk1, lp.bk1, lp.wv1, lp.bv1});
    if (m.cfg.use_dual_attention) {
      out.insert(out.end(),
                 {lp.wq2, lp.bq2, lp.wk2, lp.bk2, lp.wv2, lp.bv2});
    }
    out.insert(out.end(), {lp.ff_w1, lp.ff_b1, lp.ff_w2, lp.ff_b2});
    if (m.cfg.use_familiarity) {
      out.insert(out.end(), {lp.fam.w1, lp.fam.b1, lp.fam.w2, lp.fam.b2});
    }
  }
  if (m.cfg.use_made) {
    auto made = m.made.all();
    out.insert(out.end(), made.begin(), made.end());
  } else {
    out.insert(out.end(), {m.bern_w, m.bern_b});
  }
  return out;
}

StructureCache build_structures(const Model& m, const SequenceEncoding& seq) {
  const ModelConfig& cfg = m.cfg;
  const int n = seq.n();
  if (n < 1) throw data_error("build_structures: empty sequence");
  if (n > cfg.n_max) {
    throw data_error("build_structures: sequence has " + std::to_string(n) +
                     " nodes, n_max is " + std::to_string(cfg.n_max));
  }
  StructureCache sc;
  sc.n = n;
  sc.seq = seq;
  Graph permuted = from_sequence(seq);
  sc.stack = path_counts(permuted, cfg.n_k);

  const int P = cfg.n_max + 1;
  sc.mask = make_tensor(P, P);
  sc.mask_bias = make_tensor(P, P);
  sc.e_edge = make_tensor(P, P);
  sc.e_comp = make_tensor(P, P);
  for (int p = 0; p < P; ++p) {
    for (int q = 0; q < P; ++q) {
      const bool visible = q <= p;
      sc.mask->at(p, q) = visible ? 1.0f : 0.0f;
      sc.mask_bias->at(p, q) = visible ? 0.0f : -1e9f;
      const bool edge = p >= 1 && q >= 1 && p <= n && q <= n && p != q &&
                        permuted.has_edge(p - 1, q - 1);
      sc.e_edge->at(p, q) = edge ? 1.0f : 0.0f;
      sc.e_comp->at(p, q) = edge ? 0.0f : 1.0f;
    }
  }

  const int width = cfg.n_k + 1;
  sc.g_ext = make_tensor(P * P, width);
  for (int p = 1; p <= n; ++p) {
    for (int q = 1; q <= n; ++q) {
      float* row = sc.g_ext->data.data() +
                   static_cast<size_t>(p * P + q) * width;
      for (int k = 0; k < width; ++k) row[k] = sc.stack.g(k, q - 1, p - 1);
    }
  }

  sc.l_rows = make_tensor(P, cfg.n_max);
  for (int p = 1; p <= n; ++p) {
    for (int c = 0; c < cfg.n_max; ++c) {
      sc.l_rows->at(p, c) = static_cast<float>(seq.rows[p - 1][c]);
    }
  }

  sc.pos_place = make_tensor(P, n);
  for (int j = 0; j < n; ++j) sc.pos_place->at(j + 1, j) = 1.0f;
  return sc;
}

TensorPtr embed_inputs(Tape& tape, const Model& m, const StructureCache& sc) {
  const int P = m.cfg.n_max + 1;
  const int d = m.cfg.d_hidden;
  TensorPtr proj = tape.add_rowwise(tape.matmul(sc.l_rows, m.proj_w),
                                    m.proj_b);
  TensorPtr row_mask = make_tensor(P, d);
  for (int p = 1; p < P; ++p) {
    for (int c = 0; c < d; ++c) row_mask->at(p, c) = 1.0f;
  }
  TensorPtr sel0 = make_tensor(P, 1);
  sel0->at(0, 0) = 1.0f;
  TensorPtr embedded = tape.add(tape.mul(proj, row_mask),
                                tape.matmul(sel0, m.start_embed));
  if (m.cfg.use_graph_pos_enc) {
    TensorPtr pos_rows = positional_encoding(tape, sc.stack, m.pos,
                                             m.cfg.n_max);
    embedded = tape.add(embedded, tape.matmul(sc.pos_place, pos_rows));
  } else {
    embedded = tape.add(embedded, tape.mul(m.index_embed, row_mask));
  }
  return embedded;
}

TensorPtr attention_sublayer(Tape& tape, const TensorPtr& v_in,
                             const StructureCache& sc, const LayerParams& lp,
                             const ModelConfig& cfg,
                             const TensorPtr& fam_override) {
  const int P = cfg.n_max + 1;
  TensorPtr fam = fam_override;
  if (!fam && cfg.use_familiarity) {
    fam = tape.reshape(apply_familiarity_net(tape, sc.g_ext, lp.fam), P, P);
  }
  TensorPtr att1 =
      branch_attention(tape, v_in, sc, cfg, lp.wq1, lp.bq1, lp.wk1, lp.bk1);
  if (fam) att1 = tape.mul(att1, fam);
  TensorPtr v1 = tape.add_rowwise(tape.matmul(v_in, lp.wv1), lp.bv1);
  if (!cfg.use_dual_attention) {
    return tape.matmul(att1, v1);
  }
  TensorPtr att2 =
      branch_attention(tape, v_in, sc, cfg, lp.wq2, lp.bq2, lp.wk2, lp.bk2);
  if (fam) att2 = tape.mul(att2, fam);
  TensorPtr v2 = tape.add_rowwise(tape.matmul(v_in, lp.wv2), lp.bv2);
  return tape.add(tape.matmul(tape.mul(att1, sc.e_edge), v1),
                  tape.matmul(tape.mul(att2, sc.e_comp), v2));
}

TensorPtr encoder_forward(Tape& tape, const Model& m,
                          const StructureCache& sc) {
  TensorPtr v = embed_inputs(tape, m, sc);
  for (const auto& lp : m.layers) {
    TensorPtr a = tape.add(v, attention_sublayer(tape, v, sc, lp, m.cfg));
    TensorPtr inner =
        tape.relu(tape.add_rowwise(tape.matmul(a, lp.ff_w1), lp.ff_b1));
    TensorPtr ff = tape.add_rowwise(tape.matmul(inner, lp.ff_w2), lp.ff_b2);
    v = tape.add(a, ff);
  }
  return v;
}

TensorPtr graph_nll(Tape& tape, const Model& m, const StructureCache& sc) {
  const ModelConfig& cfg = m.cfg;
  const int n = sc.n;
  if (n < 2) {
    auto zero = make_tensor(1, 1);
    zero->has_value64 = true;
    return zero;
  }
  TensorPtr h = encoder_forward(tape, m, sc);
  TensorPtr hs = tape.slice_rows(h, 1, n - 1);
  TensorPtr cond_h = cfg.made_input_sigmoid ? tape.sigmoid(hs) : hs;

  const std::vector<float> bits = n_bits(n, cfg.n_max);
  TensorPtr bits_rows = make_tensor(n - 1, static_cast<int>(bits.size()));
  for (int r = 0; r < n - 1; ++r) {
    for (size_t c = 0; c < bits.size(); ++c) {
      bits_rows->at(r, static_cast<int>(c)) = bits[c];
    }
  }
  TensorPtr cond = tape.concat_cols({cond_h, bits_rows});

  TensorPtr targets = make_tensor(n - 1, cfg.n_max);
  TensorPtr targets_comp = make_tensor(n - 1, cfg.n_max);
  TensorPtr known = make_tensor(n - 1, cfg.n_max);
  for (int r = 0; r < n - 1; ++r) {
    for (int c = 0; c < cfg.n_max; ++c) {
      const float y = static_cast<float>(sc.seq.rows[r + 1][c]);
      targets->at(r, c) = y;
      targets_comp->at(r, c) = 1.0f - y;
      known->at(r, c) = c <= r ? 1.0f : 0.0f;
    }
  }

  TensorPtr p;
  TensorPtr q;  // conditionals along the all-zero row, for P(row = 0)
  if (cfg.use_made) {
    p = made_forward(tape, targets, cond, m.made_masks, m.made);
    q = conditionals_for_zero_target(tape, cond, m.made_masks, m.made);
  } else {
    p = tape.sigmoid(tape.add_rowwise(tape.matmul(cond, m.bern_w), m.bern_b));
    q = tape.affine(p, -1.0, 1.0);
  }
  TensorPtr pc = tape.clamp(p, kProbFloor, 1.0 - kProbFloor);
  TensorPtr qc = tape.clamp(q, kProbFloor, 1.0 - kProbFloor);

  TensorPtr terms = tape.add(tape.mul(targets, tape.log(pc)),
                             tape.mul(targets_comp,
                                      tape.log1p(tape.scale(pc, -1.0))));
  TensorPtr ones_col = make_tensor(cfg.n_max, 1);
  for (auto& v : ones_col->data) v = 1.0f;
  TensorPtr log_p_row = tape.matmul(tape.mul(known, terms), ones_col);
  TensorPtr log_p0_row = tape.matmul(tape.mul(known, tape.log(qc)), ones_col);
  TensorPtr correction = tape.log1p(tape.scale(tape.exp(log_p0_row), -1.0));
  return tape.sum(tape.add(tape.scale(log_p_row, -1.0), correction));
}

}  // namespace gransformer
