#include "gransformer/training.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>
#include <sstream>
#include <utility>

namespace gransformer {

namespace {

const char kMagic[4] = {'G', 'R', 'N', 'S'};
const uint32_t kVersion = 1;

std::string sorted_block(std::vector<std::pair<std::string, std::string>> kv) {
  std::sort(kv.begin(), kv.end());
  std::string out;
  for (const auto& [k, v] : kv) {
    out += k;
    out += '=';
    out += v;
    out += '\n';
  }
  return out;
}

std::vector<std::pair<std::string, std::string>> config_pairs(
    const ModelConfig& cfg) {
  return {
      {"n_max", std::to_string(cfg.n_max)},
      {"n_k", std::to_string(cfg.n_k)},
      {"layers", std::to_string(cfg.layers)},
      {"d_hidden", std::to_string(cfg.d_hidden)},
      {"d_k", std::to_string(cfg.d_k)},
      {"use_dual_attention", cfg.use_dual_attention ? "1" : "0"},
      {"use_familiarity", cfg.use_familiarity ? "1" : "0"},
      {"use_graph_pos_enc", cfg.use_graph_pos_enc ? "1" : "0"},
      {"use_made", cfg.use_made ? "1" : "0"},
      {"made_input_sigmoid", cfg.made_input_sigmoid ? "1" : "0"},
      {"mask_mode", cfg.mask_mode == MaskMode::kMultiplyAfterSoftmax
                        ? "multiply"
                        : "additive"},
      {"made_mask_seed", std::to_string(cfg.made_mask_seed)},
  };
}

bool parse_flag(const std::string& v, const std::string& key) {
  if (v == "1") return true;
  if (v == "0") return false;
  throw data_error("flag " + key + " must be 0 or 1, got '" + v + "'");
}

long parse_long(const std::string& v, const std::string& key) {
  try {
    size_t used = 0;
    const long x = std::stol(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    throw data_error("bad integer for " + key + ": '" + v + "'");
  }
}

}  // namespace

bool apply_model_config_entry(ModelConfig* cfg, const std::string& key,
                              const std::string& value) {
  if (key == "n_max") cfg->n_max = static_cast<int>(parse_long(value, key));
  else if (key == "n_k") cfg->n_k = static_cast<int>(parse_long(value, key));
  else if (key == "layers") cfg->layers = static_cast<int>(parse_long(value, key));
  else if (key == "d_hidden") cfg->d_hidden = static_cast<int>(parse_long(value, key));
  else if (key == "d_k") cfg->d_k = static_cast<int>(parse_long(value, key));
  else if (key == "use_dual_attention") cfg->use_dual_attention = parse_flag(value, key);
  else if (key == "use_familiarity") cfg->use_familiarity = parse_flag(value, key);
  else if (key == "use_graph_pos_enc") cfg->use_graph_pos_enc = parse_flag(value, key);
  else if (key == "use_made") cfg->use_made = parse_flag(value, key);
  else if (key == "made_input_sigmoid") cfg->made_input_sigmoid = parse_flag(value, key);
  else if (key == "made_mask_seed") cfg->made_mask_seed = static_cast<uint64_t>(parse_long(value, key));
  else if (key == "mask_mode") {
    if (value == "multiply") cfg->mask_mode = MaskMode::kMultiplyAfterSoftmax;
    else if (value == "additive") cfg->mask_mode = MaskMode::kAdditivePreSoftmax;
    else throw data_error("mask_mode must be multiply or additive, got '" + value + "'");
  } else {
    return false;
  }
  return true;
}

namespace {

struct ByteWriter {
  std::ostream& out;

  void bytes(const void* src, size_t n) {
    out.write(static_cast<const char*>(src), static_cast<std::streamsize>(n));
  }
  void u32(uint32_t x) {
    unsigned char b[4];
    for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>(x >> (8 * i));
    bytes(b, 4);
  }
  void u64(uint64_t x) {
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(x >> (8 * i));
    bytes(b, 8);
  }
  void f32(float x) { u32(std::bit_cast<uint32_t>(x)); }
};

struct ByteReader {
  std::istream& in;
  size_t offset = 0;

  void bytes(void* dst, size_t n) {
    in.read(static_cast<char*>(dst), static_cast<std::streamsize>(n));
    if (static_cast<size_t>(in.gcount()) != n) {
      throw data_error("checkpoint: unexpected end of file at byte " +
                       std::to_string(offset + static_cast<size_t>(in.gcount())));
    }
    offset += n;
  }
  uint32_t u32() {
    unsigned char b[4];
    bytes(b, 4);
    uint32_t x = 0;
    for (int i = 0; i < 4; ++i) x |= static_cast<uint32_t>(b[i]) << (8 * i);
    return x;
  }
  uint64_t u64() {
    unsigned char b[8];
    bytes(b, 8);
    uint64_t x = 0;
    for (int i = 0; i < 8; ++i) x |= static_cast<uint64_t>(b[i]) << (8 * i);
    return x;
  }
  float f32() { return std::bit_cast<float>(u32()); }
  std::string str(size_t n) {
    std::string s(n, '\0');
    if (n > 0) bytes(s.data(), n);
    return s;
  }
  bool at_end() { return in.peek() == std::char_traits<char>::eof(); }
};

std::vector<TensorPtr> checkpoint_tensors(const Model& m) {
  std::vector<TensorPtr> ts = model_params(m);
  ts.push_back(m.size_histogram);
  return ts;
}

std::string shape_string(int rows, int cols) {
  return std::to_string(rows) + "x" + std::to_string(cols);
}

SequenceEncoding fresh_ordering(const Graph& g, int n_max, Rng& rng) {
  const int root = static_cast<int>(rng.below(g.n()));
  const uint64_t tie_seed = rng.next_u64();
  return to_sequence(g, bfs_order(g, root, tie_seed), n_max);
}

}  // namespace

void TrainConfig::validate() const {
  if (epochs < 0) throw config_error("train config: epochs must be >= 0");
  if (batch_size < 1) throw config_error("train config: batch size must be positive");
  if (lr < 0.0) throw config_error("train config: learning rate must be >= 0");
  if (beta1 < 0.0 || beta1 >= 1.0 || beta2 < 0.0 || beta2 >= 1.0) {
    throw config_error("train config: betas must lie in [0, 1)");
  }
  if (eps <= 0.0) throw config_error("train config: eps must be positive");
  if (clip_norm <= 0.0) throw config_error("train config: clip norm must be positive");
  if (checkpoint_every < 0) throw config_error("train config: checkpoint cadence must be >= 0");
}

double clip_gradients(const std::vector<TensorPtr>& params, double clip_norm) {
  double sq = 0.0;
  for (const auto& p : params) {
    p->ensure_grad();
    for (float g : p->grad) sq += static_cast<double>(g) * g;
  }
  const double norm = std::sqrt(sq);
  if (norm > clip_norm) {
    const double s = clip_norm / norm;
    for (const auto& p : params) {
      for (float& g : p->grad) g = static_cast<float>(g * s);
    }
  }
  return norm;
}

Adam::Adam(std::vector<TensorPtr> params, const TrainConfig& cfg)
    : params_(std::move(params)),
      lr_(cfg.lr),
      beta1_(cfg.beta1),
      beta2_(cfg.beta2),
      eps_(cfg.eps),
      clip_(cfg.clip_norm) {
  cfg.validate();
  m_.reserve(params_.size());
  v_.reserve(params_.size());
  for (const auto& p : params_) {
    m_.emplace_back(static_cast<size_t>(p->numel()), 0.0);
    v_.emplace_back(static_cast<size_t>(p->numel()), 0.0);
  }
}

void Adam::step() {
  clip_gradients(params_, clip_);
  ++t_;
  const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (size_t i = 0; i < params_.size(); ++i) {
    auto& p = *params_[i];
    for (int j = 0; j < p.numel(); ++j) {
      const double g = static_cast<double>(p.grad[static_cast<size_t>(j)]);
      double& mj = m_[i][static_cast<size_t>(j)];
      double& vj = v_[i][static_cast<size_t>(j)];
      mj = beta1_ * mj + (1.0 - beta1_) * g;
      vj = beta2_ * vj + (1.0 - beta2_) * g * g;
      const double update = lr_ * (mj / bc1) / (std::sqrt(vj / bc2) + eps_);
      p.data[static_cast<size_t>(j)] = static_cast<float>(
          static_cast<double>(p.data[static_cast<size_t>(j)]) - update);
    }
  }
}

double train_epoch(Model& m, const std::vector<Graph>& dataset, Adam& opt,
                   int batch_size, Rng& rng) {
  if (dataset.empty()) throw data_error("train: empty dataset");
  if (batch_size < 1) throw config_error("train: batch size must be positive");

  std::vector<int> order(dataset.size());
  std::iota(order.begin(), order.end(), 0);
  rng.shuffle(order);

  const auto params = model_params(m);
  double total = 0.0;
  size_t done = 0;
  while (done < order.size()) {
    for (const auto& p : params) p->zero_grad();
    const size_t stop = std::min(done + static_cast<size_t>(batch_size),
                                 order.size());
    for (; done < stop; ++done) {
      const int gi = order[done];
      const Graph& g = dataset[static_cast<size_t>(gi)];
      const SequenceEncoding seq = fresh_ordering(g, m.cfg.n_max, rng);
      double value = 0.0;
      try {
        Tape tape;
        TensorPtr loss = graph_nll(tape, m, build_structures(m, seq));
        value = scalar_value(loss);
        tape.backward(loss);
      } catch (const numeric_error& e) {
        throw numeric_error("train: graph " + std::to_string(gi) + ": " +
                            e.what());
      }
      if (!std::isfinite(value)) {
        throw numeric_error("train: graph " + std::to_string(gi) +
                            ": non-finite loss " + std::to_string(value));
      }
      total += value;
    }
    opt.step();
  }
  return total / static_cast<double>(dataset.size());
}

double eval_nll(const Model& m, const std::vector<Graph>& dataset) {
  if (dataset.empty()) throw data_error("eval: empty dataset");
  double total = 0.0;
  for (const Graph& g : dataset) {
    const auto seq = to_sequence(g, bfs_order(g, 0, 0), m.cfg.n_max);
    Tape tape(false);
    total += scalar_value(graph_nll(tape, m, build_structures(m, seq)));
  }
  return total / static_cast<double>(dataset.size());
}

void split_dataset(const std::vector<Graph>& all, double held_out,
                   uint64_t seed, std::vector<Graph>* train,
                   std::vector<Graph>* test) {
  if (all.size() < 2) throw data_error("split: need at least 2 graphs");
  if (held_out <= 0.0 || held_out >= 1.0) {
    throw config_error("split: held-out fraction must lie in (0, 1)");
  }
  std::vector<int> order(all.size());
  std::iota(order.begin(), order.end(), 0);
  Rng rng(seed);
  rng.shuffle(order);
  int n_test = static_cast<int>(held_out * static_cast<double>(all.size()) + 0.5);
  n_test = std::max(1, std::min(n_test, static_cast<int>(all.size()) - 1));
  train->clear();
  test->clear();
  for (size_t i = 0; i < order.size(); ++i) {
    const Graph& g = all[static_cast<size_t>(order[i])];
    if (i < static_cast<size_t>(n_test)) test->push_back(g);
    else train->push_back(g);
  }
}

void record_size_histogram(Model& m, const std::vector<Graph>& dataset) {
  if (dataset.empty()) throw data_error("histogram: empty dataset");
  auto& h = *m.size_histogram;
  std::fill(h.data.begin(), h.data.end(), 0.0f);
  for (const Graph& g : dataset) {
    if (g.n() < 1 || g.n() > m.cfg.n_max) {
      throw data_error("histogram: graph size " + std::to_string(g.n()) +
                       " outside [1, " + std::to_string(m.cfg.n_max) + "]");
    }
    h.data[static_cast<size_t>(g.n() - 1)] += 1.0f;
  }
}

std::string serialize_config(const ModelConfig& cfg) {
  return sorted_block(config_pairs(cfg));
}

void save_checkpoint(const Model& m, int epoch, const std::string& rng_state,
                     const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw data_error("checkpoint: cannot open '" + path + "' for writing");
  ByteWriter w{out};

  w.bytes(kMagic, 4);
  w.u32(kVersion);

  auto kv = config_pairs(m.cfg);
  kv.push_back({"epoch", std::to_string(epoch)});
  kv.push_back({"rng_state", rng_state});
  const std::string block = sorted_block(std::move(kv));
  w.u64(block.size());
  w.bytes(block.data(), block.size());

  const auto tensors = checkpoint_tensors(m);
  w.u64(tensors.size());
  for (const auto& t : tensors) {
    w.u32(static_cast<uint32_t>(t->name.size()));
    w.bytes(t->name.data(), t->name.size());
    w.u32(2);
    w.u64(static_cast<uint64_t>(t->rows));
    w.u64(static_cast<uint64_t>(t->cols));
    for (float v : t->data) w.f32(v);
  }
  out.flush();
  if (!out) throw data_error("checkpoint: write to '" + path + "' failed");
}

LoadedCheckpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw data_error("checkpoint: cannot open '" + path + "'");
  ByteReader r{in};

  char magic[4];
  r.bytes(magic, 4);
  if (std::memcmp(magic, kMagic, 4) != 0) {
    throw data_error("checkpoint: bad magic bytes at byte 0");
  }
  const uint32_t version = r.u32();
  if (version != kVersion) {
    throw data_error("checkpoint: unsupported format version " +
                     std::to_string(version));
  }

  const uint64_t block_len = r.u64();
  const std::string block = r.str(block_len);
  ModelConfig cfg;
  int epoch = 0;
  std::string rng_state;
  std::istringstream lines(block);
  std::string line;
  while (std::getline(lines, line)) {
    if (line.empty()) continue;
    const size_t eq = line.find('=');
    if (eq == std::string::npos) {
      throw data_error("checkpoint: malformed config line '" + line + "'");
    }
    const std::string key = line.substr(0, eq);
    const std::string value = line.substr(eq + 1);
    if (key == "epoch") epoch = static_cast<int>(parse_long(value, key));
    else if (key == "rng_state") rng_state = value;
    else if (!apply_model_config_entry(&cfg, key, value)) {
      throw data_error("checkpoint: unknown config key '" + key + "'");
    }
  }
  cfg.validate();

  LoadedCheckpoint out;
  out.model = make_model(cfg, 0);
  out.epoch = epoch;
  out.rng_state = rng_state;

  std::vector<TensorPtr> expected = checkpoint_tensors(out.model);
  std::vector<bool> seen(expected.size(), false);

  const uint64_t count = r.u64();
  if (count != expected.size()) {
    throw data_error("checkpoint: holds " + std::to_string(count) +
                     " tensors, model needs " +
                     std::to_string(expected.size()));
  }
  for (uint64_t i = 0; i < count; ++i) {
    const uint32_t name_len = r.u32();
    const std::string name = r.str(name_len);
    const size_t name_at = r.offset;
    const uint32_t rank = r.u32();
    if (rank != 2) {
      throw data_error("checkpoint: tensor '" + name + "' has rank " +
                       std::to_string(rank) + " at byte " +
                       std::to_string(name_at));
    }
    const auto rows = static_cast<int>(r.u64());
    const auto cols = static_cast<int>(r.u64());

    size_t slot = expected.size();
    for (size_t e = 0; e < expected.size(); ++e) {
      if (expected[e]->name == name) {
        slot = e;
        break;
      }
    }
    if (slot == expected.size()) {
      throw data_error("checkpoint: tensor '" + name +
                       "' does not exist in a model with this config");
    }
    if (seen[slot]) {
      throw data_error("checkpoint: duplicate tensor '" + name + "'");
    }
    seen[slot] = true;
    TensorPtr t = expected[slot];
    if (rows != t->rows || cols != t->cols) {
      throw data_error("checkpoint: tensor '" + name + "' is " +
                       shape_string(rows, cols) + ", model expects " +
                       shape_string(t->rows, t->cols));
    }
    for (auto& v : t->data) v = r.f32();
  }
  for (size_t e = 0; e < expected.size(); ++e) {
    if (!seen[e]) {
      throw data_error("checkpoint: missing tensor '" + expected[e]->name +
                       "'");
    }
  }
  if (!r.at_end()) {
    throw data_error("checkpoint: trailing data at byte " +
                     std::to_string(r.offset));
  }
  return out;
}

std::vector<AblationRun> ablation_suite(const std::vector<Graph>& train,
                                        const std::vector<Graph>& test,
                                        const ModelConfig& base,
                                        const TrainConfig& cfg) {
  cfg.validate();

  ModelConfig no_structure = base;
  no_structure.use_dual_attention = false;
  no_structure.use_familiarity = false;
  no_structure.use_graph_pos_enc = false;

  ModelConfig neither = no_structure;
  neither.use_made = false;

  const std::vector<std::pair<std::string, ModelConfig>> variants = {
      {"full", base},
      {"no-structure", no_structure},
      {"no-structure-no-made", neither},
  };

  std::vector<AblationRun> out;
  for (const auto& [name, mc] : variants) {
    Model m = make_model(mc, cfg.seed);
    Adam opt(model_params(m), cfg);
    Rng rng(cfg.seed);
    AblationRun run;
    run.name = name;
    for (int e = 0; e < cfg.epochs; ++e) {
      run.trace.push_back(train_epoch(m, train, opt, cfg.batch_size, rng));
    }
    run.train_nll = eval_nll(m, train);
    run.test_nll = eval_nll(m, test);
    out.push_back(std::move(run));
  }
  return out;
}

}  // namespace gransformer
