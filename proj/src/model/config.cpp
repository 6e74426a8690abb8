#include "objreason/model/config.hpp"

#include "objreason/numerics/error.hpp"
#include "objreason/scenes/vocab.hpp"

namespace objreason {

std::string to_string(AttentionMode m) {
  switch (m) {
    case AttentionMode::Global: return "global";
    case AttentionMode::Hierarchical: return "hierarchical";
    case AttentionMode::Mlp: return "mlp";
  }
  return "?";
}

std::string to_string(HeadKind h) {
  switch (h) {
    case HeadKind::Descriptive: return "descriptive";
    case HeadKind::Choice: return "choice";
    case HeadKind::Grid: return "grid";
    case HeadKind::Ternary: return "ternary";
  }
  return "?";
}

AttentionMode parse_attention_mode(const std::string& s) {
  for (auto m : {AttentionMode::Global, AttentionMode::Hierarchical, AttentionMode::Mlp}) {
    if (to_string(m) == s) return m;
  }
  throw ConfigError("unknown attention mode '" + s + "'");
}

int ModelConfig::vocab_size() const { return vocab > 0 ? vocab : Vocab::size(); }
int ModelConfig::answer_size() const { return answer_classes > 0 ? answer_classes : Vocab::answer_size(); }

int ModelConfig::hidden_for(HeadKind h) const {
  if (head_hidden > 0) return head_hidden;
  switch (h) {
    case HeadKind::Descriptive: return 128;
    case HeadKind::Choice: return 128;
    case HeadKind::Grid: return 144;
    case HeadKind::Ternary: return 36;
  }
  return 128;
}

ModelConfig ModelConfig::from(const KeyValueConfig& cfg) {
  ModelConfig c;
  c.layers = cfg.get_int("layers", c.layers);
  c.attention_heads = cfg.get_int("heads", c.attention_heads);
  c.latent = cfg.get_int("latent", c.latent);
  c.vocab = cfg.get_int("vocab", c.vocab);
  c.answer_classes = cfg.get_int("answer_classes", c.answer_classes);
  c.head_hidden = cfg.get_int("head_hidden", c.head_hidden);
  c.mode = parse_attention_mode(cfg.get_string("attention", to_string(c.mode)));
  c.dropout = cfg.get_double("dropout", c.dropout);
  c.mlp_width = cfg.get_int("mlp_width", c.mlp_width);
  c.mlp_length = cfg.get_int("mlp_length", c.mlp_length);
  c.grid = cfg.get_int("grid", c.grid);
  c.max_position = cfg.get_int("max_position", c.max_position);
  c.slots = cfg.get_int("slots", c.slots);
  c.validate();
  return c;
}

void ModelConfig::validate() const {
  if (layers < 0) throw ConfigError("model: layers must be >= 0");
  if (attention_heads < 1 || latent < 1) throw ConfigError("model: heads and latent must be positive");
  if (head_hidden < 0 || mlp_width < 1) throw ConfigError("model: hidden sizes must be positive");
  if (dropout < 0 || dropout >= 1) throw ConfigError("model: dropout must be in [0, 1)");
  if (grid < 1 || max_position < 2 || slots < 1) throw ConfigError("model: bad grid / position / slot settings");
  if (mode == AttentionMode::Hierarchical && layers < 2) throw ConfigError("model: hierarchical needs >= 2 layers");
}

KeyValueConfig ModelConfig::to_config() const {
  KeyValueConfig c;
  c.set("layers", std::to_string(layers));
  c.set("heads", std::to_string(attention_heads));
  c.set("latent", std::to_string(latent));
  c.set("vocab", std::to_string(vocab));
  c.set("answer_classes", std::to_string(answer_classes));
  c.set("head_hidden", std::to_string(head_hidden));
  c.set("attention", to_string(mode));
  c.set("dropout", std::to_string(dropout));
  c.set("mlp_width", std::to_string(mlp_width));
  c.set("mlp_length", std::to_string(mlp_length));
  c.set("grid", std::to_string(grid));
  c.set("max_position", std::to_string(max_position));
  c.set("slots", std::to_string(slots));
  return c;
}

}  // namespace objreason
