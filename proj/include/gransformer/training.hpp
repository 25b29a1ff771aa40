#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "gransformer/graph.hpp"
#include "gransformer/model.hpp"

namespace gransformer {

struct TrainConfig {
  int epochs = 200;
  int batch_size = 8;
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double clip_norm = 5.0;
  uint64_t seed = 1;
  int checkpoint_every = 0;  // epochs between checkpoint writes; 0 = final only

  void validate() const;  // throws config_error
};

// Scales every gradient by clip_norm / norm when the global norm exceeds
// clip_norm. Returns the pre-clip norm.
double clip_gradients(const std::vector<TensorPtr>& params, double clip_norm);

// Adaptive-moment optimizer. Moment state is 64-bit so long runs do not
// accumulate float drift; parameters themselves stay 32-bit.
class Adam {
 public:
  Adam(std::vector<TensorPtr> params, const TrainConfig& cfg);

  // Clips, then applies one update from the gradients currently on the
  // parameters. Does not zero them.
  void step();

  long steps_taken() const { return t_; }

 private:
  std::vector<TensorPtr> params_;
  std::vector<std::vector<double>> m_;
  std::vector<std::vector<double>> v_;
  double lr_, beta1_, beta2_, eps_, clip_;
  long t_ = 0;
};

// One pass over the dataset in shuffled order: one optimizer step per batch
// of batch-summed losses, a fresh BFS ordering per graph. Returns the mean
// per-graph NLL as measured during the pass. Throws numeric_error with the
// offending graph if the loss goes non-finite.
double train_epoch(Model& m, const std::vector<Graph>& dataset, Adam& opt,
                   int batch_size, Rng& rng);

// Mean per-graph NLL under a fixed canonical ordering (BFS from node 0,
// unshuffled), so repeated evaluations are comparable.
double eval_nll(const Model& m, const std::vector<Graph>& dataset);

// Deterministic shuffle-and-cut split; held_out in (0, 1).
void split_dataset(const std::vector<Graph>& all, double held_out,
                   uint64_t seed, std::vector<Graph>* train,
                   std::vector<Graph>* test);

// Fills the model's size histogram from the training graphs.
void record_size_histogram(Model& m, const std::vector<Graph>& dataset);

void save_checkpoint(const Model& m, int epoch, const std::string& rng_state,
                     const std::string& path);

struct LoadedCheckpoint {
  Model model;
  int epoch = 0;
  std::string rng_state;
};

LoadedCheckpoint load_checkpoint(const std::string& path);

// Key-sorted key=value block shared by checkpoints and run configs.
std::string serialize_config(const ModelConfig& cfg);

// Applies one model key; returns false when the key is not a model key.
// Throws data_error when the value does not parse.
bool apply_model_config_entry(ModelConfig* cfg, const std::string& key,
                              const std::string& value);

struct AblationRun {
  std::string name;
  double train_nll = 0.0;  // canonical-ordering eval after training
  double test_nll = 0.0;
  std::vector<double> trace;  // per-epoch train NLL
};

// Trains the full model, the variant without graph-structure inputs
// (familiarity, graph positional encoding, dual attention), and that variant
// with the output head reduced to independent Bernoullis. Seeds and data
// order are shared, so the rows are comparable.
std::vector<AblationRun> ablation_suite(const std::vector<Graph>& train,
                                        const std::vector<Graph>& test,
                                        const ModelConfig& base,
                                        const TrainConfig& cfg);

}  // namespace gransformer
