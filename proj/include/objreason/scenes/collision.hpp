#pragma once

#include <array>
#include <cstdint>
#include <utility>
#include <vector>

#include "objreason/scenes/episode.hpp"
#include "objreason/util/kv_config.hpp"

namespace objreason {

struct CollisionConfig {
  int frames = 12;
  int objects = 4;
  int num_slots = 0;  // 0 means equal to `objects`
  double arena = 8.0;
  int substeps = 4;
  int future_frames = 6;
  int num_choices = 3;
  double static_probability = 0.3;
  double min_speed = 0.3;  // arena units per frame
  double max_speed = 0.8;
  // descriptive, explanatory, predictive, counterfactual
  std::array<double, 4> category_weights = {1.0, 1.0, 1.0, 1.0};
  // Target share of counterfactual questions whose removed object never
  // collides. Negative: pick the removed object uniformly instead.
  double cf_disconnected_fraction = -1.0;
  bool render = true;
  int height = 32;
  int width = 32;

  static CollisionConfig from(const KeyValueConfig& cfg);
  void validate() const;
  int slots() const { return num_slots > 0 ? num_slots : objects; }
};

struct Disc {
  int id = 0;
  double x = 0.0, y = 0.0;
  double vx = 0.0, vy = 0.0;
  double radius = 0.5;
};

struct CollisionSimulation {
  std::vector<std::vector<ObjectState>> trajectories;  // [disc][frame]
  std::vector<std::array<double, 2>> final_velocities;  // [disc]
  std::vector<CollisionEvent> events;                  // in time order
};

/// Equal-mass elastic discs in a square arena with reflecting walls.
/// Frame 0 is the initial state; each later frame advances `substeps`
/// integration steps. Contacts between approaching discs exchange the
/// normal velocity components and are recorded as events. Pairs are
/// resolved in ascending id order, so a disc that never touches another
/// has no influence on anyone else's trajectory.
CollisionSimulation simulate_collisions(const std::vector<Disc>& discs, double arena, int frames,
                                        int substeps);

/// Edge e1 -> e2 whenever e1 happens strictly before e2 and they share an
/// object.
std::vector<std::pair<int, int>> causal_edges(const std::vector<CollisionEvent>& events);

/// Indices of all transitive causal ancestors of `target`.
std::vector<int> event_ancestors(const std::vector<CollisionEvent>& events,
                                 const std::vector<std::pair<int, int>>& edges, int target);

bool pair_collides(const std::vector<CollisionEvent>& events, int a, int b);

Episode gen_collision_episode(const CollisionConfig& config, std::uint64_t seed);

}  // namespace objreason
