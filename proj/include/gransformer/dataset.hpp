#pragma once

#include <string>
#include <vector>

#include "gransformer/graph.hpp"
#include "gransformer/model.hpp"
#include "gransformer/training.hpp"

namespace gransformer {

// Multi-graph edge-list text: a `graph <id> <n>` header opens each block,
// `u v` lines follow, `#` starts a comment anywhere, blank lines are free.
struct DatasetParse {
  std::vector<Graph> graphs;
  long duplicate_edges = 0;  // collapsed while reading, worth a warning
};

// `origin` names the source in diagnostics (a path, or "<memory>").
DatasetParse parse_dataset_text(const std::string& text,
                                const std::string& origin);
DatasetParse load_dataset(const std::string& path);

std::string dataset_text(const std::vector<Graph>& graphs);
void write_dataset(const std::vector<Graph>& graphs, const std::string& path);

// One flat `key = value` file covering the model, the optimizer, and the
// data plumbing. Unknown keys are rejected so typos fail loudly.
struct RunConfig {
  ModelConfig model;
  TrainConfig train;
  std::string dataset;    // training corpus path; required by cmd_train
  double held_out = 0.2;  // test fraction of the corpus

  void validate() const;  // throws config_error
};

RunConfig parse_run_config_text(const std::string& text,
                                const std::string& origin);
RunConfig load_run_config(const std::string& path);

// Applies one `key=value` pair on top of a parsed config, with the same key
// set and validation as the file parser.
void apply_override(RunConfig* cfg, const std::string& assignment);

std::string run_config_text(const RunConfig& cfg);

}  // namespace gransformer
