#include "objreason/harness/config.hpp"

#include <set>

#include "objreason/numerics/error.hpp"

namespace objreason {

namespace {

const std::set<std::string> kTopLevel = {
    "task",         "data",          "episodes",         "data_seed",        "split",
    "val_fraction", "test_fraction", "labeled_fraction", "encoder",          "encoder.shuffle",
    "mask.scheme",  "steps",         "seed",             "eval_every",       "eval_split",
    "eval_limit",   "checkpoint_every", "out",           "batch.supervised", "batch.unsupervised",
    "batch.descriptive_share",       "task.l1_weight"};

const std::map<std::string, std::set<std::string>> kGroups = {
    {"scene", {"frames", "objects", "slots", "arena", "substeps", "future_frames", "choices", "static_probability",
               "min_speed", "max_speed", "weight.descriptive", "weight.explanatory", "weight.predictive",
               "weight.counterfactual", "cf_disconnected_fraction", "render", "height", "width", "grid", "cones",
               "moves", "move_duration", "containment", "containment_probability", "context_panels",
               "max_panel_objects", "max_query_objects", "blicket_probability", "split", "heldout_probability",
               "heldout_lit_counts", "reasoning_types"}},
    {"model", {"layers", "heads", "latent", "vocab", "answer_classes", "head_hidden", "attention", "dropout",
               "mlp_width", "mlp_length", "grid", "max_position", "slots"}},
    {"aux", {"loss", "negatives", "temperature", "similarity", "weight"}},
    {"mask", {"scheme", "probability", "buffer", "cutoff", "target_length"}},
    {"lr", {"max", "final", "warmup", "decay"}},
    {"optim", {"kind", "beta1", "beta2", "eps", "weight_decay"}},
    {"image", {"channels", "stem_stride", "residual_blocks"}},
};

void check_keys(const KeyValueConfig& kv) {
  for (const auto& [key, value] : kv.entries()) {
    if (kTopLevel.count(key)) continue;
    const auto dot = key.find('.');
    if (dot != std::string::npos) {
      auto it = kGroups.find(key.substr(0, dot));
      if (it != kGroups.end() && it->second.count(key.substr(dot + 1))) continue;
    }
    throw ConfigError("unknown config key '" + key + "'");
  }
}

}  // namespace

TrainConfig TrainConfig::from(const KeyValueConfig& kv) {
  check_keys(kv);
  TrainConfig c;
  c.source = kv;
  c.task = parse_task(kv.get_string("task", "collision"));
  c.data_dir = kv.get_string("data", "");
  c.scene = kv.subset("scene");
  c.episodes = kv.get_int("episodes", c.episodes);
  c.data_seed = static_cast<std::uint64_t>(kv.get_long("data_seed", static_cast<long>(c.data_seed)));
  c.split = parse_split_kind(kv.get_string("split", "iid"));
  c.val_fraction = kv.get_double("val_fraction", c.val_fraction);
  c.test_fraction = kv.get_double("test_fraction", c.test_fraction);
  c.labeled_fraction = kv.get_double("labeled_fraction", c.labeled_fraction);
  if (!(c.labeled_fraction > 0.0 && c.labeled_fraction <= 1.0)) throw ConfigError("labeled_fraction must be in (0,1]");

  c.encoder = parse_encoder(kv.get_string("encoder", "oracle"));
  c.shuffle_slots = kv.get_bool("encoder.shuffle", c.shuffle_slots);
  const auto image = kv.subset("image");
  c.image.channels = image.get_int("channels", c.image.channels);
  c.image.stem_stride = image.get_int("stem_stride", c.image.stem_stride);
  c.image.residual_blocks = image.get_int("residual_blocks", c.image.residual_blocks);

  c.model = ModelConfig::from(kv.subset("model"));
  c.image.dim = c.model.latent;
  c.aux = AuxLossConfig::from(kv.subset("aux"));
  c.scheme = parse_mask_scheme(kv.get_string("mask.scheme", "a"));
  c.mask = MaskParams::from(kv.subset("mask"));
  c.schedule = Schedule::from(kv.subset("lr"));
  c.optim = OptimizerConfig::from(kv.subset("optim"));

  c.supervised_batch = kv.get_int("batch.supervised", c.supervised_batch);
  c.unsupervised_batch = kv.get_int("batch.unsupervised", c.unsupervised_batch);
  c.descriptive_share = kv.get_double("batch.descriptive_share", c.descriptive_share);
  c.l1_weight = kv.get_double("task.l1_weight", c.l1_weight);
  if (c.supervised_batch <= 0 || c.unsupervised_batch <= 0) throw ConfigError("batch sizes must be positive");
  if (c.descriptive_share < 0.0 || c.descriptive_share > 1.0) throw ConfigError("batch.descriptive_share in [0,1]");

  c.steps = kv.get_long("steps", c.steps);
  c.seed = static_cast<std::uint64_t>(kv.get_long("seed", 0));
  c.eval_every = kv.get_long("eval_every", c.eval_every);
  c.eval_split = kv.get_string("eval_split", c.eval_split);
  c.eval_limit = kv.get_int("eval_limit", c.eval_limit);
  c.checkpoint_every = kv.get_long("checkpoint_every", c.checkpoint_every);
  c.out_dir = kv.get_string("out", "");
  if (c.steps < 0 || c.episodes <= 0) throw ConfigError("steps must be >= 0 and episodes > 0");
  if (c.model.mode == AttentionMode::Mlp && c.aux.weight > 0.0) {
    throw ConfigError("the MLP baseline has no per-slot outputs; set aux.weight=0");
  }
  return c;
}

TrainConfig TrainConfig::with(const std::string& key, const std::string& value) const {
  KeyValueConfig kv = source;
  kv.set(key, value);
  return from(kv);
}

}  // namespace objreason
