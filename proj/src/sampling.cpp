#include "gransformer/sampling.hpp"

#include <cmath>
#include <string>

namespace gransformer {

namespace {

const double kProbFloor = 1e-7;
const long kRejectionCap = 1000000;

double clamp_prob(double p) {
  if (p < kProbFloor) return kProbFloor;
  if (p > 1.0 - kProbFloor) return 1.0 - kProbFloor;
  return p;
}

}  // namespace

NodeSizeDistribution make_size_distribution(
    const std::vector<double>& counts_by_n) {
  if (counts_by_n.size() < 2) {
    throw data_error("size distribution: need counts for n >= 1");
  }
  double total = 0.0;
  for (size_t n = 0; n < counts_by_n.size(); ++n) {
    const double c = counts_by_n[n];
    if (c < 0.0) {
      throw data_error("size distribution: negative count at n = " +
                       std::to_string(n));
    }
    if (n == 0 && c > 0.0) {
      throw data_error("size distribution: mass on n = 0");
    }
    total += c;
  }
  if (total <= 0.0) throw data_error("size distribution: all counts zero");

  NodeSizeDistribution d;
  d.prob.resize(counts_by_n.size(), 0.0);
  d.cumulative.resize(counts_by_n.size(), 0.0);
  double run = 0.0;
  for (size_t n = 0; n < counts_by_n.size(); ++n) {
    d.prob[n] = counts_by_n[n] / total;
    run += d.prob[n];
    d.cumulative[n] = run;
  }
  d.cumulative.back() = 1.0;
  return d;
}

NodeSizeDistribution make_size_distribution(const std::vector<int>& sizes,
                                            int n_max) {
  std::vector<double> counts(static_cast<size_t>(n_max) + 1, 0.0);
  for (int s : sizes) {
    if (s < 1 || s > n_max) {
      throw data_error("size distribution: graph size " + std::to_string(s) +
                       " outside [1, " + std::to_string(n_max) + "]");
    }
    counts[static_cast<size_t>(s)] += 1.0;
  }
  return make_size_distribution(counts);
}

int sample_node_count(const NodeSizeDistribution& d, Rng& rng) {
  if (d.cumulative.empty()) throw data_error("size distribution: empty");
  const double u = rng.uniform();
  for (size_t n = 0; n < d.cumulative.size(); ++n) {
    if (u < d.cumulative[n]) return static_cast<int>(n);
  }
  return static_cast<int>(d.cumulative.size()) - 1;
}

ConstrainedRowDistribution make_constrained_row(RowConditional conditional,
                                                int length) {
  if (length < 1) {
    throw std::invalid_argument("constrained row: length must be >= 1");
  }
  double log_p_zero = 0.0;
  std::vector<uint8_t> prefix;
  prefix.reserve(static_cast<size_t>(length));
  for (int j = 0; j < length; ++j) {
    log_p_zero += std::log1p(-clamp_prob(conditional(prefix)));
    prefix.push_back(0);
  }
  return make_constrained_row(std::move(conditional), length, log_p_zero);
}

ConstrainedRowDistribution make_constrained_row(RowConditional conditional,
                                                int length, double log_p_zero) {
  if (length < 1) {
    throw std::invalid_argument("constrained row: length must be >= 1");
  }
  ConstrainedRowDistribution d;
  d.conditional = std::move(conditional);
  d.length = length;
  d.log_p_zero = log_p_zero;
  return d;
}

double row_nll(const std::vector<uint8_t>& row, const std::vector<double>& p,
               double p_zero, int node_index) {
  if (node_index == 1) return 0.0;
  if (row.size() != p.size()) {
    throw std::invalid_argument("row_nll: row and probability sizes differ");
  }
  bool any = false;
  double chain = 0.0;
  for (size_t j = 0; j < row.size(); ++j) {
    const double pj = clamp_prob(p[j]);
    chain += row[j] ? std::log(pj) : std::log1p(-pj);
    any = any || row[j] != 0;
  }
  if (!any) {
    throw data_error("row_nll: all-zero row for node " +
                     std::to_string(node_index));
  }
  return -chain + std::log1p(-p_zero);
}

double constrained_conditional(double p_bit, double log_zero_prefix,
                               double log_p_zero, bool prefix_all_zero,
                               bool last_bit) {
  if (!prefix_all_zero) return p_bit;
  if (last_bit) return 1.0;
  // P_i * Z / (Z - P(0)) with Z the zero-prefix probability, all in logs.
  const double denom = -std::expm1(log_p_zero - log_zero_prefix);
  if (denom <= 0.0) return 1.0;
  const double scaled = p_bit / denom;
  return scaled < 1.0 ? scaled : 1.0;
}

std::vector<uint8_t> sample_row(const ConstrainedRowDistribution& dist,
                                Rng& rng) {
  std::vector<uint8_t> row;
  row.reserve(static_cast<size_t>(dist.length));
  bool all_zero = true;
  double log_zero_prefix = 0.0;
  for (int j = 0; j < dist.length; ++j) {
    const double p = clamp_prob(dist.conditional(row));
    const double pt = constrained_conditional(p, log_zero_prefix,
                                              dist.log_p_zero, all_zero,
                                              j + 1 == dist.length);
    uint8_t bit;
    if (pt >= 1.0) {
      bit = 1;  // forced; no draw, so forced paths stay stream-neutral
    } else {
      bit = rng.uniform() < pt ? 1 : 0;
    }
    if (bit) {
      all_zero = false;
    } else if (all_zero) {
      log_zero_prefix += std::log1p(-p);
    }
    row.push_back(bit);
  }
  return row;
}

RejectionSample rejection_sample_oracle(const RowConditional& conditional,
                                        int length, Rng& rng) {
  if (length < 1) {
    throw std::invalid_argument("rejection oracle: length must be >= 1");
  }
  RejectionSample out;
  std::vector<uint8_t> row;
  row.reserve(static_cast<size_t>(length));
  while (out.attempts < kRejectionCap) {
    ++out.attempts;
    row.clear();
    bool any = false;
    for (int j = 0; j < length; ++j) {
      const uint8_t bit =
          rng.uniform() < clamp_prob(conditional(row)) ? 1 : 0;
      any = any || bit;
      row.push_back(bit);
    }
    if (any) {
      out.row = row;
      out.ok = true;
      return out;
    }
  }
  return out;
}

ConstrainedRowDistribution model_row_distribution(
    const Model& m, const SequenceEncoding& prefix, int n_total) {
  const ModelConfig& cfg = m.cfg;
  const int known = prefix.n();
  if (known < 1 || known >= n_total || n_total > cfg.n_max) {
    throw data_error("model row distribution: prefix of " +
                     std::to_string(known) + " rows for target size " +
                     std::to_string(n_total));
  }

  // One encoder pass over the prefix; the head then sees a fixed
  // conditioning vector and only the target bits vary per evaluation.
  std::vector<float> cond(static_cast<size_t>(cfg.cond_width()), 0.0f);
  {
    Tape tape;
    StructureCache sc = build_structures(m, prefix);
    TensorPtr h = encoder_forward(tape, m, sc);
    TensorPtr hr = tape.slice_rows(h, known, 1);
    TensorPtr ch = cfg.made_input_sigmoid ? tape.sigmoid(hr) : hr;
    for (int c = 0; c < cfg.d_hidden; ++c) cond[static_cast<size_t>(c)] = ch->at(0, c);
    const std::vector<float> bits = n_bits(n_total, cfg.n_max);
    for (size_t c = 0; c < bits.size(); ++c) {
      cond[static_cast<size_t>(cfg.d_hidden) + c] = bits[c];
    }
  }

  const Model* mp = &m;
  RowConditional f = [mp, cond](const std::vector<uint8_t>& bits) -> double {
    const ModelConfig& c = mp->cfg;
    Tape tape;
    TensorPtr target = make_tensor(1, c.n_max);
    for (size_t j = 0; j < bits.size(); ++j) {
      target->at(0, static_cast<int>(j)) = static_cast<float>(bits[j]);
    }
    TensorPtr cr = make_tensor(1, static_cast<int>(cond.size()));
    cr->data = cond;
    TensorPtr p;
    if (c.use_made) {
      p = made_forward(tape, target, cr, mp->made_masks, mp->made);
    } else {
      p = tape.sigmoid(
          tape.add_rowwise(tape.matmul(cr, mp->bern_w), mp->bern_b));
    }
    return static_cast<double>(p->at(0, static_cast<int>(bits.size())));
  };
  return make_constrained_row(std::move(f), known);
}

Graph generate_graph(const Model& m, const NodeSizeDistribution& d, Rng& rng) {
  const int n = sample_node_count(d, rng);
  if (n > m.cfg.n_max) {
    throw data_error("generate: sampled size " + std::to_string(n) +
                     " exceeds n_max " + std::to_string(m.cfg.n_max));
  }
  SequenceEncoding seq;
  seq.n_max = m.cfg.n_max;
  seq.rows.push_back(std::vector<uint8_t>(static_cast<size_t>(seq.n_max), 0));
  for (int i = 2; i <= n; ++i) {
    ConstrainedRowDistribution dist = model_row_distribution(m, seq, n);
    std::vector<uint8_t> row = sample_row(dist, rng);
    row.resize(static_cast<size_t>(seq.n_max), 0);
    seq.rows.push_back(std::move(row));
  }
  return from_sequence(seq);
}

}  // namespace gransformer
