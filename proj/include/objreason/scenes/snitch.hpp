#pragma once

#include <cstdint>
#include <vector>

#include "objreason/scenes/episode.hpp"
#include "objreason/util/kv_config.hpp"

namespace objreason {

struct SnitchConfig {
  int grid = 4;
  int frames = 10;
  int objects = 4;  // including the snitch
  int cones = 1;
  int num_slots = 0;  // 0 means equal to `objects`
  int moves = 4;
  int move_duration = 2;  // frames per move
  bool containment = true;
  double containment_probability = 0.5;  // chance a cone is sent onto the snitch
  bool render = true;
  int height = 32;
  int width = 32;

  static SnitchConfig from(const KeyValueConfig& cfg);
  void validate() const;
  int slots() const { return num_slots > 0 ? num_slots : objects; }
  int labels() const { return grid * grid; }
};

struct Cell {
  int row = 0;
  int col = 0;
  bool operator==(const Cell&) const = default;
};

/// One object slides from its current cell to `to` over `duration` frames,
/// starting at `start_frame` (arrival at start_frame + duration).
struct SnitchMove {
  int object = 0;
  int start_frame = 0;
  int duration = 2;
  Cell to;
};

struct SnitchScript {
  int grid = 4;
  int frames = 10;
  std::vector<Cell> start;      // per object
  std::vector<bool> is_cone;    // per object
  int snitch = 0;
  std::vector<SnitchMove> moves;
};

/// Plays a script. A cone that comes to rest on the snitch's cell contains
/// it: from the arrival frame the snitch is invisible and shares the cone's
/// position, including through the cone's later moves.
std::vector<std::vector<ObjectState>> simulate_snitch(const SnitchScript& script);

inline int cell_index(Cell c, int grid) { return c.row * grid + c.col; }
Cell cell_at(double x, double y);

Episode gen_snitch_episode(const SnitchConfig& config, std::uint64_t seed);

/// Builds an episode from an explicit script (all objects cubes except
/// cones and the snitch).
Episode snitch_episode_from_script(const SnitchScript& script, const SnitchConfig& config);

}  // namespace objreason
