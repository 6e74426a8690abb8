#pragma once

#include <cstdint>
#include <string>

#include "objreason/encoder/image_encoders.hpp"
#include "objreason/encoder/slots.hpp"
#include "objreason/model/config.hpp"
#include "objreason/optim/lamb.hpp"
#include "objreason/optim/schedule.hpp"
#include "objreason/scenes/episode.hpp"
#include "objreason/selfsup/aux_loss.hpp"
#include "objreason/selfsup/mask.hpp"
#include "objreason/util/kv_config.hpp"

namespace objreason {

/// Everything a run needs, parsed from flat key=value text. The source text
/// is kept so checkpoints can echo it and evaluation can rebuild the run.
struct TrainConfig {
  TaskKind task = TaskKind::Collision;
  std::string data_dir;         // empty: generate in memory
  KeyValueConfig scene;         // generator keys ("scene." prefix)
  int episodes = 2000;
  std::uint64_t data_seed = 1;
  SplitKind split = SplitKind::Iid;
  double val_fraction = 0.1;
  double test_fraction = 0.1;
  double labeled_fraction = 1.0;

  EncoderKind encoder = EncoderKind::Oracle;
  bool shuffle_slots = true;  // oracle encoder only
  ImageEncoderConfig image;

  ModelConfig model;
  AuxLossConfig aux;
  MaskScheme scheme = MaskScheme::OnePerFrame;
  MaskParams mask;
  Schedule schedule;
  OptimizerConfig optim;

  int supervised_batch = 32;
  int unsupervised_batch = 32;
  double descriptive_share = 0.5;  // collision sub-batch split
  double l1_weight = 1.0;          // snitch: expected grid distance added to cross-entropy

  long steps = 1000;
  std::uint64_t seed = 0;
  long eval_every = 0;  // 0: only at the end
  std::string eval_split = "val";
  int eval_limit = 0;  // 0: whole split
  long checkpoint_every = 0;
  std::string out_dir;  // empty: nothing written during training

  KeyValueConfig source;

  static TrainConfig from(const KeyValueConfig& kv);
  static TrainConfig parse(const std::string& text) { return from(KeyValueConfig::parse(text)); }
  static TrainConfig load(const std::string& path) { return from(KeyValueConfig::load(path)); }

  /// Returns a config re-parsed with one key replaced.
  TrainConfig with(const std::string& key, const std::string& value) const;
};

}  // namespace objreason
