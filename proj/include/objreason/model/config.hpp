#pragma once

#include <string>

#include "objreason/util/kv_config.hpp"

namespace objreason {

enum class AttentionMode { Global, Hierarchical, Mlp };
enum class HeadKind { Descriptive, Choice, Grid, Ternary };

std::string to_string(AttentionMode m);
std::string to_string(HeadKind h);
AttentionMode parse_attention_mode(const std::string& s);

struct ModelConfig {
  int layers = 2;           // N_T
  int attention_heads = 2;  // N_H
  int latent = 16;          // d, object and word embedding size
  int vocab = 0;            // 0: the built-in question vocabulary
  int answer_classes = 0;   // 0: the built-in answer vocabulary
  int head_hidden = 0;      // 0: per-head defaults (128 / 128 / 144 / 36)
  AttentionMode mode = AttentionMode::Global;
  double dropout = 0.0;
  int mlp_width = 256;
  int mlp_length = 0;  // fixed flattened sequence length for the MLP baseline
  int grid = 4;
  int max_position = 64;  // relative offsets span [-(max_position-1), max_position-1]
  int slots = 4;          // N_o, needed by the hierarchical merge

  int width() const { return attention_heads * latent; }  // D
  int vocab_size() const;
  int answer_size() const;
  int hidden_for(HeadKind h) const;
  /// Stage split of the hierarchical model.
  int stage1_layers() const { return layers / 2 > 0 ? layers / 2 : 1; }
  int stage2_layers() const { return layers - layers / 2 > 0 ? layers - layers / 2 : 1; }

  static ModelConfig from(const KeyValueConfig& cfg);
  void validate() const;
  /// Round-trippable key=value text.
  KeyValueConfig to_config() const;
};

}  // namespace objreason
