#include "objreason/scenes/snitch.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "objreason/numerics/error.hpp"
#include "objreason/scenes/render.hpp"
#include "objreason/util/random.hpp"

namespace objreason {

SnitchConfig SnitchConfig::from(const KeyValueConfig& cfg) {
  SnitchConfig c;
  c.grid = cfg.get_int("grid", c.grid);
  c.frames = cfg.get_int("frames", c.frames);
  c.objects = cfg.get_int("objects", c.objects);
  c.cones = cfg.get_int("cones", c.cones);
  c.num_slots = cfg.get_int("slots", c.num_slots);
  c.moves = cfg.get_int("moves", c.moves);
  c.move_duration = cfg.get_int("move_duration", c.move_duration);
  c.containment = cfg.get_bool("containment", c.containment);
  c.containment_probability = cfg.get_double("containment_probability", c.containment_probability);
  c.render = cfg.get_bool("render", c.render);
  c.height = cfg.get_int("height", c.height);
  c.width = cfg.get_int("width", c.width);
  c.validate();
  return c;
}

void SnitchConfig::validate() const {
  if (grid < 2 || grid > 8) throw ConfigError("snitch: grid must be in [2, 8]");
  if (frames < 2 || frames > 20) throw ConfigError("snitch: frames must be in [2, 20]");
  if (objects < 1 || objects > 6) throw ConfigError("snitch: objects must be in [1, 6]");
  if (objects >= grid * grid) throw ConfigError("snitch: more objects than free grid cells");
  if (cones < 0 || cones > objects - 1) throw ConfigError("snitch: cones must leave room for the snitch");
  if (slots() < objects) throw ConfigError("snitch: slots must be >= objects");
  if (moves < 0 || move_duration < 1) throw ConfigError("snitch: bad move settings");
  if (moves * move_duration > frames - 1) throw ConfigError("snitch: moves do not fit in the episode");
  if (containment && cones == 0 && containment_probability > 0) {
    throw ConfigError("snitch: containment needs at least one cone");
  }
}

Cell cell_at(double x, double y) {
  return {static_cast<int>(std::floor(y)), static_cast<int>(std::floor(x))};
}

namespace {

ObjectState at_cell(Cell c) { return {c.col + 0.5, c.row + 0.5, true, -1}; }

}  // namespace

std::vector<std::vector<ObjectState>> simulate_snitch(const SnitchScript& script) {
  const std::size_t n = script.start.size();
  std::vector<std::vector<ObjectState>> traj(n, std::vector<ObjectState>(static_cast<std::size_t>(script.frames)));
  // Free motion first: each object interpolates between consecutive rests.
  for (std::size_t o = 0; o < n; ++o) {
    std::vector<SnitchMove> own;
    for (const auto& m : script.moves) {
      if (m.object == static_cast<int>(o)) own.push_back(m);
    }
    std::sort(own.begin(), own.end(), [](const auto& a, const auto& b) { return a.start_frame < b.start_frame; });
    Cell rest = script.start[o];
    std::size_t next = 0;
    for (int t = 0; t < script.frames; ++t) {
      while (next < own.size() && own[next].start_frame + own[next].duration <= t) rest = own[next++].to;
      ObjectState s = at_cell(rest);
      if (next < own.size() && own[next].start_frame < t) {
        const auto& m = own[next];
        const double a = static_cast<double>(t - m.start_frame) / m.duration;
        const ObjectState to = at_cell(m.to);
        s.x += a * (to.x - s.x);
        s.y += a * (to.y - s.y);
      }
      traj[o][static_cast<std::size_t>(t)] = s;
    }
  }
  // Containment: the first cone to come to rest on the snitch captures it.
  const auto sn = static_cast<std::size_t>(script.snitch);
  int container = -1;
  for (int t = 0; t < script.frames && container < 0; ++t) {
    for (const auto& m : script.moves) {
      if (m.start_frame + m.duration != t || !script.is_cone[static_cast<std::size_t>(m.object)]) continue;
      const auto& s = traj[sn][static_cast<std::size_t>(t)];
      if (cell_at(s.x, s.y) == m.to && s.x == m.to.col + 0.5 && s.y == m.to.row + 0.5) {
        container = m.object;
        for (int u = t; u < script.frames; ++u) {
          auto& st = traj[sn][static_cast<std::size_t>(u)];
          st = traj[static_cast<std::size_t>(container)][static_cast<std::size_t>(u)];
          st.visible = false;
          st.container = container;
        }
        break;
      }
    }
  }
  return traj;
}

Episode snitch_episode_from_script(const SnitchScript& script, const SnitchConfig& config) {
  Episode ep;
  ep.task = TaskKind::Snitch;
  ep.num_frames = script.frames;
  ep.num_slots = std::max(config.slots(), static_cast<int>(script.start.size()));
  ep.height = config.height;
  ep.width = config.width;
  ep.arena = script.grid;
  const auto traj = simulate_snitch(script);
  for (std::size_t o = 0; o < script.start.size(); ++o) {
    SceneObject obj;
    obj.id = static_cast<int>(o);
    if (static_cast<int>(o) == script.snitch) {
      obj.shape = shape::kSnitch;
      obj.color = 6;
      obj.radius = 0.25;
    } else if (script.is_cone[o]) {
      obj.shape = shape::kCone;
      obj.color = static_cast<int>(o) % kNumObjectColors;
      obj.radius = 0.45;
      obj.layer = 1;
    } else {
      obj.shape = shape::kCube;
      obj.color = static_cast<int>(o) % kNumObjectColors;
      obj.radius = 0.35;
    }
    obj.trajectory = traj[o];
    ep.objects.push_back(std::move(obj));
  }
  const auto& last = ep.objects[static_cast<std::size_t>(script.snitch)].trajectory.back();
  ep.answer = cell_index(cell_at(last.x, last.y), script.grid);
  ep.annotations.snitch_id = script.snitch;
  ep.annotations.snitch_visible_final = last.visible;
  ep.annotations.grid = script.grid;
  return ep;
}

Episode gen_snitch_episode(const SnitchConfig& config, std::uint64_t seed) {
  config.validate();
  Rng rng(derive_seed(seed, 0));
  const int n = config.objects;
  const int g = config.grid;

  SnitchScript script;
  script.grid = g;
  script.frames = config.frames;
  std::vector<int> ids(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) ids[static_cast<std::size_t>(i)] = i;
  std::shuffle(ids.begin(), ids.end(), rng);
  script.snitch = ids[0];
  script.is_cone.assign(static_cast<std::size_t>(n), false);
  for (int c = 0; c < config.cones; ++c) script.is_cone[static_cast<std::size_t>(ids[static_cast<std::size_t>(c + 1)])] = true;

  std::vector<int> cells(static_cast<std::size_t>(g * g));
  for (int i = 0; i < g * g; ++i) cells[static_cast<std::size_t>(i)] = i;
  std::shuffle(cells.begin(), cells.end(), rng);
  std::vector<Cell> where(static_cast<std::size_t>(n));
  for (int o = 0; o < n; ++o) {
    const int c = cells[static_cast<std::size_t>(o)];
    where[static_cast<std::size_t>(o)] = {c / g, c % g};
  }
  script.start = where;

  const bool contain = config.containment && config.cones > 0 && config.moves > 0 &&
                       bernoulli(rng, config.containment_probability);
  const int contain_move = contain ? uniform_int(rng, 0, config.moves - 1) : -1;
  int container = -1;
  const int slack = config.frames - 1 - config.moves * config.move_duration;
  int start = uniform_int(rng, 0, slack);
  for (int k = 0; k < config.moves; ++k, start += config.move_duration) {
    SnitchMove m;
    m.start_frame = start;
    m.duration = config.move_duration;
    if (k == contain_move) {
      std::vector<int> cones;
      for (int o = 0; o < n; ++o) {
        if (script.is_cone[static_cast<std::size_t>(o)]) cones.push_back(o);
      }
      m.object = cones[static_cast<std::size_t>(uniform_int(rng, 0, static_cast<int>(cones.size()) - 1))];
      m.to = where[static_cast<std::size_t>(script.snitch)];
      container = m.object;
    } else {
      std::vector<int> movers;
      for (int o = 0; o < n; ++o) {
        if (!(container >= 0 && o == script.snitch)) movers.push_back(o);
      }
      m.object = movers[static_cast<std::size_t>(uniform_int(rng, 0, static_cast<int>(movers.size()) - 1))];
      std::vector<Cell> free;
      for (int c = 0; c < g * g; ++c) {
        const Cell cell{c / g, c % g};
        const bool taken = std::any_of(where.begin(), where.end(), [&](Cell w) { return w == cell; });
        if (!taken) free.push_back(cell);
      }
      m.to = free[static_cast<std::size_t>(uniform_int(rng, 0, static_cast<int>(free.size()) - 1))];
    }
    where[static_cast<std::size_t>(m.object)] = m.to;
    if (container >= 0) where[static_cast<std::size_t>(script.snitch)] = where[static_cast<std::size_t>(container)];
    script.moves.push_back(m);
  }
  Episode ep = snitch_episode_from_script(script, config);
  ep.seed = seed;
  std::array<bool, kNumObjectColors> used{};
  for (auto& obj : ep.objects) {
    if (obj.shape == shape::kSnitch) continue;
    int color;
    do color = uniform_int(rng, 0, kNumObjectColors - 1);
    while (used[static_cast<std::size_t>(color)]);
    used[static_cast<std::size_t>(color)] = true;
    obj.color = color;
    obj.size = uniform_int(rng, 0, 1);
    if (obj.shape != shape::kCone) {
      obj.shape = uniform_int(rng, 0, 2);
      obj.radius = obj.size == 0 ? 0.3 : 0.4;
    }
  }
  if (config.render) render_episode(ep);
  return ep;
}

}  // namespace objreason
