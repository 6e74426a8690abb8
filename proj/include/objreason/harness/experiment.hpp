#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "objreason/harness/config.hpp"
#include "objreason/harness/metrics.hpp"
#include "objreason/model.hpp"
#include "objreason/scenes/dataset.hpp"

namespace objreason {

struct Dataset {
  std::vector<Episode> episodes;
  int frames = 0;
  int slots = 0;
};

/// Reads `data_dir` or generates the configured episodes in memory.
std::shared_ptr<const Dataset> load_dataset(const TrainConfig& cfg);

/// A configured run: data, splits, derived model shape and parameters.
struct Experiment {
  TrainConfig cfg;
  ModelConfig model;  // cfg.model completed from the data
  std::vector<HeadKind> heads;
  std::shared_ptr<const Dataset> data;
  Splits splits;
  int slots = 0;  // sequence elements per frame (regions for the hyperpixel encoder)
  std::vector<Matrix<float>> oracle;  // per-episode slot vectors when the encoder is fixed
  ParamStore<float> params;

  const Episode& episode(int i) const { return data->episodes[static_cast<std::size_t>(i)]; }
  const std::vector<int>& split(const std::string& name) const;
};

Experiment make_experiment(const TrainConfig& cfg, std::shared_ptr<const Dataset> data = nullptr);

/// Object rows of one episode. With `detach`, encoder parameters receive no
/// gradient through them.
Var<float> encode_episode(Graph<float>& g, const Experiment& ex, const ParamStore<float>& params, int episode,
                          bool detach = false);

/// Question sequences of one episode: one per choice for multiple-choice
/// questions, otherwise one.
std::vector<InputSequence<float>> question_sequences(Graph<float>& g, const Experiment& ex,
                                                     const ParamStore<float>& params, int episode, Var<float> objects);

struct TrainResult {
  ParamStore<float> params;
  OptState<float> opt;
  std::vector<MetricsRecord> log;
  long step = 0;

  std::string log_text() const;  // JSON lines
};

using ProgressFn = std::function<void(const MetricsRecord&)>;

/// Runs cfg.steps optimizer steps and evaluates on cfg.eval_split every
/// cfg.eval_every steps and at the end.
TrainResult train(const Experiment& ex, const ProgressFn& progress = {});
TrainResult train(const TrainConfig& cfg, const ProgressFn& progress = {});

using ObjectSource = std::function<Var<float>(Graph<float>&, int episode)>;

struct BatchPrediction {
  std::vector<Prediction> predictions;  // unscored
  Matrix<float> cls;                    // one row per question sequence
  std::vector<int> first_row;           // per episode
};

/// One forward pass over the given episodes. `objects` replaces the
/// configured encoder when set.
BatchPrediction predict_batch(const Experiment& ex, const ParamStore<float>& params, const std::vector<int>& episodes,
                              const ObjectSource& objects = {});

EvalOutput evaluate(const Experiment& ex, const ParamStore<float>& params, const std::string& split, long step = 0);

Checkpoint make_checkpoint(const Experiment& ex, const TrainResult& result);
/// Rebuilds the run echoed in the checkpoint with its trained parameters.
Experiment experiment_from_checkpoint(const Checkpoint& ckpt, std::shared_ptr<const Dataset> data = nullptr);
EvalOutput evaluate_checkpoint(const std::string& path, const std::string& split);

}  // namespace objreason
