#include <atomic>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "gransformer/common.hpp"
#include "gransformer/dataset.hpp"
#include "gransformer/eval.hpp"
#include "gransformer/oracles.hpp"
#include "gransformer/sampling.hpp"
#include "gransformer/svg.hpp"
#include "gransformer/synth.hpp"
#include "gransformer/training.hpp"

namespace gransformer {
namespace {

struct Options {
  std::optional<std::string> config;
  std::optional<std::string> out;
  std::optional<uint64_t> seed;
  std::optional<int> count;
  std::optional<int> threads;
  std::vector<std::string> overrides;
  std::vector<std::string> positionals;
};

void print_usage(std::FILE* to) {
  std::fprintf(to,
               "usage: gransformer <command> [options]\n"
               "\n"
               "commands:\n"
               "  train     --config PATH [--seed N] [--out DIR] [--override key=value]...\n"
               "  generate  CHECKPOINT [--count N] [--seed N] [--out PATH] [--threads N]\n"
               "  evaluate  SET_A SET_B [--out DIR]\n"
               "  oracle    SUITE|list [--seed N]\n"
               "  synth     [--count N] [--seed N] [--out PATH]\n"
               "\n"
               "options:\n"
               "  --config PATH         run configuration file (key = value lines)\n"
               "  --seed N              unsigned 64-bit seed\n"
               "  --out PATH            output file (generate, synth) or directory\n"
               "  --count N             number of graphs to produce\n"
               "  --threads N           workers for generate; GRANSFORMER_THREADS as fallback\n"
               "  --override key=value  config entry applied over the file; repeatable\n");
}

uint64_t parse_u64_flag(const std::string& flag, const std::string& text) {
  size_t used = 0;
  unsigned long long v = 0;
  try {
    v = std::stoull(text, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != text.size() || text.empty() || text[0] == '-') {
    throw config_error(flag + " expects an unsigned integer, got '" + text +
                       "'");
  }
  return v;
}

int parse_int_flag(const std::string& flag, const std::string& text, int lo) {
  size_t used = 0;
  long v = 0;
  try {
    v = std::stol(text, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != text.size() || text.empty() || v < lo || v > 1000000000L) {
    throw config_error(flag + " expects an integer >= " + std::to_string(lo) +
                       ", got '" + text + "'");
  }
  return static_cast<int>(v);
}

Options parse_options(int argc, char** argv, int first) {
  Options o;
  for (int i = first; i < argc; ++i) {
    const std::string a = argv[i];
    auto value = [&](const char* flag) -> std::string {
      if (i + 1 >= argc) {
        throw config_error(std::string(flag) + " expects a value");
      }
      return argv[++i];
    };
    if (a == "--config") {
      o.config = value("--config");
    } else if (a == "--seed") {
      o.seed = parse_u64_flag("--seed", value("--seed"));
    } else if (a == "--out") {
      o.out = value("--out");
    } else if (a == "--count") {
      o.count = parse_int_flag("--count", value("--count"), 0);
    } else if (a == "--threads") {
      o.threads = parse_int_flag("--threads", value("--threads"), 1);
    } else if (a == "--override") {
      o.overrides.push_back(value("--override"));
    } else if (!a.empty() && a[0] == '-') {
      throw config_error("unknown flag '" + a + "'");
    } else {
      o.positionals.push_back(a);
    }
  }
  return o;
}

int resolve_threads(const Options& o) {
  if (o.threads) return *o.threads;
  const char* env = std::getenv("GRANSFORMER_THREADS");
  if (env != nullptr && *env != '\0') {
    return parse_int_flag("GRANSFORMER_THREADS", env, 1);
  }
  return 1;
}

// Counter-based stream split: per-item seeds depend only on (seed, index),
// so the thread count never changes what gets generated.
uint64_t stream_seed(uint64_t seed, uint64_t index) {
  uint64_t x = seed + index;
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

std::string fmt17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw data_error("cannot open '" + path + "' for writing");
  out << text;
  if (!out) throw data_error("write failed for '" + path + "'");
}

std::filesystem::path ensure_dir(const std::string& dir) {
  std::filesystem::path p(dir);
  std::error_code ec;
  std::filesystem::create_directories(p, ec);
  if (ec) {
    throw data_error("cannot create output directory '" + dir +
                     "': " + ec.message());
  }
  return p;
}

DatasetParse load_with_warning(const std::string& path) {
  DatasetParse parsed = load_dataset(path);
  if (parsed.duplicate_edges > 0) {
    std::fprintf(stderr, "warning: %ld duplicate edges collapsed in '%s'\n",
                 parsed.duplicate_edges, path.c_str());
  }
  return parsed;
}

int cmd_train(const Options& opts) {
  if (!opts.config) throw config_error("train: --config is required");
  RunConfig cfg = load_run_config(*opts.config);
  for (const std::string& ov : opts.overrides) apply_override(&cfg, ov);
  if (opts.seed) cfg.train.seed = *opts.seed;
  if (cfg.dataset.empty()) {
    throw config_error("train: config key 'dataset' is required");
  }

  const DatasetParse parsed = load_with_warning(cfg.dataset);
  std::vector<Graph> train_set, test_set;
  split_dataset(parsed.graphs, cfg.held_out, cfg.train.seed, &train_set,
                &test_set);

  Model m = make_model(cfg.model, cfg.train.seed);
  record_size_histogram(m, train_set);
  // Distinct stream from parameter init, still a pure function of the seed.
  Rng rng(stream_seed(cfg.train.seed, 0));
  Adam opt(model_params(m), cfg.train);

  const auto dir = ensure_dir(opts.out.value_or("."));
  std::string trace = "epoch,train_nll,test_nll\n";
  for (int epoch = 1; epoch <= cfg.train.epochs; ++epoch) {
    const double tr = train_epoch(m, train_set, opt, cfg.train.batch_size, rng);
    const double te = eval_nll(m, test_set);
    trace += std::to_string(epoch) + "," + fmt17(tr) + "," + fmt17(te) + "\n";
    std::printf("epoch %d train %.6f test %.6f\n", epoch, tr, te);
    if (cfg.train.checkpoint_every > 0 &&
        epoch % cfg.train.checkpoint_every == 0) {
      save_checkpoint(m, epoch, rng.state_string(),
                      (dir / ("checkpoint_" + std::to_string(epoch) + ".bin"))
                          .string());
    }
  }
  const std::string final_path = (dir / "checkpoint_final.bin").string();
  save_checkpoint(m, cfg.train.epochs, rng.state_string(), final_path);
  write_text((dir / "trace.csv").string(), trace);
  std::printf("trained %d epochs on %zu graphs (%zu held out); wrote %s\n",
              cfg.train.epochs, train_set.size(), test_set.size(),
              final_path.c_str());
  return 0;
}

int cmd_generate(const Options& opts) {
  if (opts.positionals.size() != 1) {
    throw config_error("generate: expected exactly one checkpoint path");
  }
  const LoadedCheckpoint loaded = load_checkpoint(opts.positionals[0]);
  const Model& m = loaded.model;

  std::vector<double> counts(static_cast<size_t>(m.cfg.n_max) + 1, 0.0);
  for (int i = 0; i < m.cfg.n_max; ++i) {
    counts[static_cast<size_t>(i) + 1] = m.size_histogram->data[static_cast<size_t>(i)];
  }
  const NodeSizeDistribution dist = make_size_distribution(counts);

  const int count = opts.count.value_or(10);
  const uint64_t seed = opts.seed.value_or(1);
  const int threads = std::min(resolve_threads(opts), count > 0 ? count : 1);

  std::vector<Graph> graphs(static_cast<size_t>(count));
  if (count > 0) {
    std::atomic<int> next{0};
    std::mutex fail_mu;
    std::exception_ptr failure;
    auto worker = [&]() {
      try {
        for (;;) {
          const int i = next.fetch_add(1);
          if (i >= count) return;
          Rng rng(stream_seed(seed, static_cast<uint64_t>(i) + 1));
          graphs[static_cast<size_t>(i)] = generate_graph(m, dist, rng);
        }
      } catch (...) {
        std::lock_guard<std::mutex> lock(fail_mu);
        if (!failure) failure = std::current_exception();
        next.store(count);
      }
    };
    if (threads == 1) {
      worker();
    } else {
      std::vector<std::thread> pool;
      pool.reserve(static_cast<size_t>(threads));
      for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
      for (auto& t : pool) t.join();
    }
    if (failure) std::rethrow_exception(failure);
  }

  const std::string out = opts.out.value_or("generated.txt");
  write_dataset(graphs, out);
  std::printf("wrote %d graphs to %s\n", count, out.c_str());
  return 0;
}

std::vector<double> mean_histogram(
    const std::vector<std::vector<double>>& rows, size_t width) {
  std::vector<double> mean(width, 0.0);
  for (const auto& r : rows) {
    for (size_t i = 0; i < r.size(); ++i) mean[i] += r[i];
  }
  for (double& v : mean) v /= static_cast<double>(rows.size());
  return mean;
}

std::string histogram_csv(const std::string& bin_label,
                          const std::vector<double>& a,
                          const std::vector<double>& b) {
  std::string csv = bin_label + ",set_a,set_b\n";
  for (size_t i = 0; i < a.size(); ++i) {
    csv += std::to_string(i) + "," + fmt17(a[i]) + "," + fmt17(b[i]) + "\n";
  }
  return csv;
}

int cmd_evaluate(const Options& opts) {
  if (opts.positionals.size() != 2) {
    throw config_error("evaluate: expected two dataset paths");
  }
  const DatasetParse a = load_with_warning(opts.positionals[0]);
  const DatasetParse b = load_with_warning(opts.positionals[1]);
  const MMDReport report = evaluate_sets(a.graphs, b.graphs);

  std::vector<std::vector<double>> deg_a, deg_b, clus_a, clus_b;
  size_t deg_width = 0;
  for (const Graph& g : a.graphs) {
    deg_a.push_back(degree_histogram(g));
    clus_a.push_back(clustering_histogram(g));
    deg_width = std::max(deg_width, deg_a.back().size());
  }
  for (const Graph& g : b.graphs) {
    deg_b.push_back(degree_histogram(g));
    clus_b.push_back(clustering_histogram(g));
    deg_width = std::max(deg_width, deg_b.back().size());
  }
  const auto mean_deg_a = mean_histogram(deg_a, deg_width);
  const auto mean_deg_b = mean_histogram(deg_b, deg_width);
  const auto mean_clus_a = mean_histogram(clus_a, kClusteringBins);
  const auto mean_clus_b = mean_histogram(clus_b, kClusteringBins);

  const std::string label_a =
      std::filesystem::path(opts.positionals[0]).filename().string();
  const std::string label_b =
      std::filesystem::path(opts.positionals[1]).filename().string();

  const auto dir = ensure_dir(opts.out.value_or("."));
  write_text((dir / "report.txt").string(), report_text(report));
  write_text((dir / "report.csv").string(), report_csv(report));
  write_text((dir / "degree_hist.csv").string(),
             histogram_csv("degree", mean_deg_a, mean_deg_b));
  write_text((dir / "clustering_hist.csv").string(),
             histogram_csv("bin", mean_clus_a, mean_clus_b));
  write_text((dir / "degree_hist.svg").string(),
             svg_bar_chart("Mean degree histogram", mean_deg_a, label_a,
                           mean_deg_b, label_b));
  write_text((dir / "clustering_hist.svg").string(),
             svg_bar_chart("Mean clustering histogram", mean_clus_a, label_a,
                           mean_clus_b, label_b));
  std::fputs(report_text(report).c_str(), stdout);
  return 0;
}

int cmd_oracle(const Options& opts) {
  if (opts.positionals.size() != 1) {
    throw config_error("oracle: expected a suite name (or 'list')");
  }
  if (opts.positionals[0] == "list") {
    for (const std::string& name : oracle_suite_names()) {
      std::printf("%s\n", name.c_str());
    }
    return 0;
  }
  const OracleReport report =
      run_oracle_suite(opts.positionals[0], opts.seed.value_or(7));
  for (const OracleCase& c : report.cases) {
    std::printf("%s\t%s\t%s\t%s\n", report.suite.c_str(), c.name.c_str(),
                c.pass ? "pass" : "fail", c.detail.c_str());
  }
  return report.all_pass() ? 0 : 1;
}

int cmd_synth(const Options& opts) {
  Rng rng(opts.seed.value_or(1));
  const int count = opts.count.value_or(100);
  const std::vector<Graph> graphs = synthetic_set(count, 6, 20, rng);
  const std::string out = opts.out.value_or("synthetic.txt");
  write_dataset(graphs, out);
  std::printf("wrote %d graphs to %s\n", count, out.c_str());
  return 0;
}

int run(int argc, char** argv) {
  if (argc < 2) {
    print_usage(stderr);
    return 2;
  }
  const std::string cmd = argv[1];
  if (cmd == "help" || cmd == "--help" || cmd == "-h") {
    print_usage(stdout);
    return 0;
  }
  const Options opts = parse_options(argc, argv, 2);
  if (cmd == "train") return cmd_train(opts);
  if (cmd == "generate") return cmd_generate(opts);
  if (cmd == "evaluate") return cmd_evaluate(opts);
  if (cmd == "oracle") return cmd_oracle(opts);
  if (cmd == "synth") return cmd_synth(opts);
  std::fprintf(stderr, "error: unknown command '%s'\n", cmd.c_str());
  print_usage(stderr);
  return 2;
}

}  // namespace
}  // namespace gransformer

int main(int argc, char** argv) {
  try {
    return gransformer::run(argc, argv);
  } catch (const gransformer::config_error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const gransformer::data_error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  } catch (const gransformer::numeric_error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 4;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}
