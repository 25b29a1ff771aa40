#include "gransformer/dataset.hpp"

#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "gransformer/common.hpp"

namespace gransformer {

namespace {

std::string strip_comment_and_trim(const std::string& line) {
  std::string s = line.substr(0, line.find('#'));
  const size_t begin = s.find_first_not_of(" \t\r");
  if (begin == std::string::npos) return "";
  const size_t end = s.find_last_not_of(" \t\r");
  return s.substr(begin, end - begin + 1);
}

std::vector<std::string> split_fields(const std::string& s) {
  std::vector<std::string> fields;
  std::istringstream in(s);
  std::string f;
  while (in >> f) fields.push_back(f);
  return fields;
}

[[noreturn]] void fail_at(const std::string& origin, int line,
                          const std::string& message) {
  throw data_error(origin + " line " + std::to_string(line) + ": " + message);
}

long parse_int_field(const std::string& v, const std::string& origin, int line,
                     const std::string& what) {
  try {
    size_t used = 0;
    const long x = std::stol(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    fail_at(origin, line, "bad " + what + " '" + v + "'");
  }
}

std::string read_file(const std::string& path, const std::string& what) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw data_error(what + ": cannot open '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

// Run-config keys that are not model keys; apply_model_config_entry owns the
// rest, so the two surfaces cannot drift apart.
bool apply_run_entry(RunConfig* cfg, const std::string& key,
                     const std::string& value) {
  auto as_long = [&](const char* what) {
    try {
      size_t used = 0;
      const long x = std::stol(value, &used);
      if (used != value.size()) throw std::invalid_argument(value);
      return x;
    } catch (const std::exception&) {
      throw data_error(std::string("bad integer for ") + what + ": '" + value +
                       "'");
    }
  };
  auto as_double = [&](const char* what) {
    try {
      size_t used = 0;
      const double x = std::stod(value, &used);
      if (used != value.size()) throw std::invalid_argument(value);
      return x;
    } catch (const std::exception&) {
      throw data_error(std::string("bad number for ") + what + ": '" + value +
                       "'");
    }
  };

  if (key == "epochs") cfg->train.epochs = static_cast<int>(as_long("epochs"));
  else if (key == "batch_size") cfg->train.batch_size = static_cast<int>(as_long("batch_size"));
  else if (key == "lr") cfg->train.lr = as_double("lr");
  else if (key == "beta1") cfg->train.beta1 = as_double("beta1");
  else if (key == "beta2") cfg->train.beta2 = as_double("beta2");
  else if (key == "eps") cfg->train.eps = as_double("eps");
  else if (key == "clip_norm") cfg->train.clip_norm = as_double("clip_norm");
  else if (key == "seed") cfg->train.seed = static_cast<uint64_t>(as_long("seed"));
  else if (key == "checkpoint_every") cfg->train.checkpoint_every = static_cast<int>(as_long("checkpoint_every"));
  else if (key == "dataset") cfg->dataset = value;
  else if (key == "held_out") cfg->held_out = as_double("held_out");
  else return apply_model_config_entry(&cfg->model, key, value);
  return true;
}

}  // namespace

DatasetParse parse_dataset_text(const std::string& text,
                                const std::string& origin) {
  DatasetParse out;

  bool in_block = false;
  int block_n = 0;
  std::vector<std::pair<int, int>> block_edges;

  auto close_block = [&]() {
    if (!in_block) return;
    int dups = 0;
    out.graphs.emplace_back(block_n, block_edges, &dups);
    out.duplicate_edges += dups;
    block_edges.clear();
    in_block = false;
  };

  std::istringstream in(text);
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const std::string line = strip_comment_and_trim(raw);
    if (line.empty()) continue;
    const auto fields = split_fields(line);

    if (fields[0] == "graph") {
      if (fields.size() != 3) {
        fail_at(origin, line_no, "graph header needs 'graph <id> <n>'");
      }
      parse_int_field(fields[1], origin, line_no, "graph id");
      const long n = parse_int_field(fields[2], origin, line_no, "node count");
      if (n < 1) {
        fail_at(origin, line_no,
                "node count must be at least 1, got " + std::to_string(n));
      }
      close_block();
      in_block = true;
      block_n = static_cast<int>(n);
      continue;
    }

    if (fields.size() != 2) {
      fail_at(origin, line_no, "expected 'u v' edge, got '" + line + "'");
    }
    if (!in_block) {
      fail_at(origin, line_no, "edge before any graph header");
    }
    const long u = parse_int_field(fields[0], origin, line_no, "endpoint");
    const long v = parse_int_field(fields[1], origin, line_no, "endpoint");
    if (u < 0 || u >= block_n || v < 0 || v >= block_n) {
      fail_at(origin, line_no,
              "edge " + std::to_string(u) + " " + std::to_string(v) +
                  " out of range for " + std::to_string(block_n) + " nodes");
    }
    if (u == v) {
      fail_at(origin, line_no, "self loop on node " + std::to_string(u));
    }
    block_edges.emplace_back(static_cast<int>(u), static_cast<int>(v));
  }
  close_block();
  return out;
}

DatasetParse load_dataset(const std::string& path) {
  return parse_dataset_text(read_file(path, "dataset"), path);
}

std::string dataset_text(const std::vector<Graph>& graphs) {
  std::string out;
  for (size_t i = 0; i < graphs.size(); ++i) {
    const Graph& g = graphs[i];
    out += "graph " + std::to_string(i) + " " + std::to_string(g.n()) + "\n";
    for (const auto& [u, v] : g.edges()) {
      out += std::to_string(u) + " " + std::to_string(v) + "\n";
    }
  }
  return out;
}

void write_dataset(const std::vector<Graph>& graphs, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw data_error("dataset: cannot open '" + path + "' for writing");
  const std::string text = dataset_text(graphs);
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw data_error("dataset: write to '" + path + "' failed");
}

void RunConfig::validate() const {
  model.validate();
  train.validate();
  if (!(held_out > 0.0 && held_out < 1.0)) {
    throw config_error("run config: held_out must lie in (0, 1)");
  }
}

RunConfig parse_run_config_text(const std::string& text,
                                const std::string& origin) {
  RunConfig cfg;
  std::istringstream in(text);
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const std::string line = strip_comment_and_trim(raw);
    if (line.empty()) continue;

    const size_t eq = line.find('=');
    if (eq == std::string::npos) {
      throw config_error(origin + " line " + std::to_string(line_no) +
                         ": expected 'key = value', got '" + line + "'");
    }
    const std::string key = strip_comment_and_trim(line.substr(0, eq));
    const std::string value = strip_comment_and_trim(line.substr(eq + 1));
    if (key.empty() || value.empty()) {
      throw config_error(origin + " line " + std::to_string(line_no) +
                         ": expected 'key = value', got '" + line + "'");
    }

    try {
      if (!apply_run_entry(&cfg, key, value)) {
        throw data_error("unknown key '" + key + "'");
      }
    } catch (const data_error& e) {
      throw config_error(origin + " line " + std::to_string(line_no) + ": " +
                         e.what());
    }
  }
  cfg.validate();
  return cfg;
}

RunConfig load_run_config(const std::string& path) {
  std::string text;
  try {
    text = read_file(path, "config");
  } catch (const data_error& e) {
    // A missing config file is a usage problem, not a data problem.
    throw config_error(e.what());
  }
  return parse_run_config_text(text, path);
}

void apply_override(RunConfig* cfg, const std::string& assignment) {
  const size_t eq = assignment.find('=');
  if (eq == std::string::npos) {
    throw config_error("override '" + assignment +
                       "': expected key=value");
  }
  const std::string key = strip_comment_and_trim(assignment.substr(0, eq));
  const std::string value = strip_comment_and_trim(assignment.substr(eq + 1));
  if (key.empty() || value.empty()) {
    throw config_error("override '" + assignment +
                       "': expected key=value");
  }
  try {
    if (!apply_run_entry(cfg, key, value)) {
      throw data_error("unknown key '" + key + "'");
    }
  } catch (const data_error& e) {
    throw config_error("override '" + assignment + "': " + e.what());
  }
  cfg->validate();
}

std::string run_config_text(const RunConfig& cfg) {
  std::string out = serialize_config(cfg.model);
  out += "epochs=" + std::to_string(cfg.train.epochs) + "\n";
  out += "batch_size=" + std::to_string(cfg.train.batch_size) + "\n";
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", cfg.train.lr);
  out += std::string("lr=") + buf + "\n";
  std::snprintf(buf, sizeof(buf), "%.17g", cfg.train.beta1);
  out += std::string("beta1=") + buf + "\n";
  std::snprintf(buf, sizeof(buf), "%.17g", cfg.train.beta2);
  out += std::string("beta2=") + buf + "\n";
  std::snprintf(buf, sizeof(buf), "%.17g", cfg.train.eps);
  out += std::string("eps=") + buf + "\n";
  std::snprintf(buf, sizeof(buf), "%.17g", cfg.train.clip_norm);
  out += std::string("clip_norm=") + buf + "\n";
  out += "seed=" + std::to_string(cfg.train.seed) + "\n";
  out += "checkpoint_every=" + std::to_string(cfg.train.checkpoint_every) +
         "\n";
  if (!cfg.dataset.empty()) out += "dataset=" + cfg.dataset + "\n";
  std::snprintf(buf, sizeof(buf), "%.17g", cfg.held_out);
  out += std::string("held_out=") + buf + "\n";
  return out;
}

}  // namespace gransformer
