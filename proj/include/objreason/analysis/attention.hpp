#pragma once

#include <vector>

#include "objreason/harness/experiment.hpp"

namespace objreason {

/// Forward pass over one question sequence with attention recorded. For
/// the hierarchical model this is the second (cross-frame) stage.
AttentionTrace attention_trace(const Experiment& ex, const ParamStore<float>& params, int episode, int choice = 0);

struct WordAttention {
  int position = 0;  // index among the words
  int word = -1;     // vocabulary id
  int frame = -1;
  int slot = -1;
  double weight = 0.0;
};

/// For each word, the object element that puts the most attention on it.
/// `layer` < 0 counts from the end. Ties go to the lowest frame, then slot.
std::vector<WordAttention> word_object_attention(const AttentionTrace& trace, int layer = -1, int head = 0);

struct SlotWeight {
  int slot = -1;
  double weight = 0.0;
};

/// The `k` object slots of each frame that CLS attends to most, heaviest
/// first (ties by slot).
std::vector<std::vector<SlotWeight>> cls_object_attention(const AttentionTrace& trace, int layer = -1, int head = 0,
                                                         int k = 2);

}  // namespace objreason
