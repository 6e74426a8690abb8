#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "objreason/scenes/episode.hpp"
#include "objreason/util/kv_config.hpp"

namespace objreason {

nlohmann::json episode_to_json(const Episode& ep);
Episode episode_from_json(const nlohmann::json& j);

/// Generator dispatch; episode i uses seed derive_seed(seed, i).
Episode generate_episode(TaskKind task, const KeyValueConfig& config, std::uint64_t seed);
std::vector<Episode> generate_episodes(TaskKind task, const KeyValueConfig& config, int count,
                                       std::uint64_t seed);

/// Index partitions into an episode list.
struct Splits {
  std::vector<int> train;
  std::vector<int> val;
  std::vector<int> test;
  std::vector<int> labeled;    // supervised pool, a subset of train
  std::vector<int> unlabeled;  // every train episode
};

/// Held-out episodes (compositional / systematic) go only to val and test;
/// iid splits shuffle everything. The labeled pool takes the first
/// round(fraction * |train|) episodes of a seeded shuffle of train.
Splits make_splits(const std::vector<Episode>& episodes, double labeled_fraction, SplitKind kind,
                   double val_fraction, double test_fraction, std::uint64_t seed);

/// `<dir>/episodes.jsonl` plus `<dir>/manifest.json`.
void write_dataset(const std::string& dir, const std::vector<Episode>& episodes, const nlohmann::json& manifest);
std::vector<Episode> read_episodes(const std::string& dir);
nlohmann::json read_manifest(const std::string& dir);

}  // namespace objreason
