#pragma once

#include <cstdint>
#include <set>
#include <vector>

#include "objreason/scenes/episode.hpp"
#include "objreason/util/kv_config.hpp"

namespace objreason {

struct BlicketConfig {
  int objects = 4;         // candidate objects per problem; the machine takes one more slot
  int context_panels = 6;  // plus one query panel
  int max_panel_objects = 3;
  int max_query_objects = 2;
  double blicket_probability = 0.4;
  SplitKind split = SplitKind::Iid;
  double heldout_probability = 0.0;
  std::set<int> heldout_lit_counts = {4};  // systematic split
  std::set<ReasoningType> reasoning_types;  // empty means any
  bool render = true;
  int height = 32;
  int width = 32;

  static BlicketConfig from(const KeyValueConfig& cfg);
  void validate() const;
  int slots() const { return objects + 1; }
};

/// Context evidence: object sets and whether the machine lit.
struct BlicketEvidence {
  std::vector<std::vector<int>> panels;
  std::vector<bool> lit;
};

/// Label by elimination: objects seen on an unlit panel are non-blickets;
/// the query surely contains a blicket iff some lit panel's unexplained
/// objects all lie inside it.
BlicketAnswer blicket_answer(const BlicketEvidence& evidence, const std::vector<int>& query);
ReasoningType blicket_reasoning(const BlicketEvidence& evidence, const std::vector<int>& query,
                                BlicketAnswer answer);

/// (shape, color) combinations reserved for the compositional hold-out.
bool heldout_combination(int shape_code, int color_code);

Episode gen_blicket_episode(const BlicketConfig& config, std::uint64_t seed);

}  // namespace objreason
