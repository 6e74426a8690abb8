#include "objreason/scenes/collision.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>

#include "objreason/numerics/error.hpp"
#include "objreason/scenes/render.hpp"
#include "objreason/scenes/vocab.hpp"
#include "objreason/util/random.hpp"

namespace objreason {

CollisionConfig CollisionConfig::from(const KeyValueConfig& cfg) {
  CollisionConfig c;
  c.frames = cfg.get_int("frames", c.frames);
  c.objects = cfg.get_int("objects", c.objects);
  c.num_slots = cfg.get_int("slots", c.num_slots);
  c.arena = cfg.get_double("arena", c.arena);
  c.substeps = cfg.get_int("substeps", c.substeps);
  c.future_frames = cfg.get_int("future_frames", c.future_frames);
  c.num_choices = cfg.get_int("choices", c.num_choices);
  c.static_probability = cfg.get_double("static_probability", c.static_probability);
  c.min_speed = cfg.get_double("min_speed", c.min_speed);
  c.max_speed = cfg.get_double("max_speed", c.max_speed);
  c.category_weights[0] = cfg.get_double("weight.descriptive", c.category_weights[0]);
  c.category_weights[1] = cfg.get_double("weight.explanatory", c.category_weights[1]);
  c.category_weights[2] = cfg.get_double("weight.predictive", c.category_weights[2]);
  c.category_weights[3] = cfg.get_double("weight.counterfactual", c.category_weights[3]);
  c.cf_disconnected_fraction = cfg.get_double("cf_disconnected_fraction", c.cf_disconnected_fraction);
  c.render = cfg.get_bool("render", c.render);
  c.height = cfg.get_int("height", c.height);
  c.width = cfg.get_int("width", c.width);
  c.validate();
  return c;
}

void CollisionConfig::validate() const {
  if (frames < 2 || frames > 20) throw ConfigError("collision: frames must be in [2, 20]");
  if (objects < 2 || objects > 6) throw ConfigError("collision: objects must be in [2, 6]");
  if (slots() < objects) throw ConfigError("collision: slots must be >= objects");
  if (substeps < 1 || future_frames < 0 || num_choices < 1) throw ConfigError("collision: bad step counts");
  if (min_speed < 0 || max_speed < min_speed) throw ConfigError("collision: bad speed range");
  double wsum = 0;
  for (double w : category_weights) {
    if (w < 0) throw ConfigError("collision: negative category weight");
    wsum += w;
  }
  if (wsum <= 0) throw ConfigError("collision: category weights sum to zero");
  if (cf_disconnected_fraction > 1.0) throw ConfigError("collision: disconnected fraction > 1");
  // Discs of the large size must fit comfortably: total disc area at most
  // a third of the arena.
  const double large = 0.7;
  if (objects * std::numbers::pi * large * large > arena * arena / 3.0) {
    throw ConfigError("collision: too many objects for arena size");
  }
}

CollisionSimulation simulate_collisions(const std::vector<Disc>& discs, double arena, int frames,
                                        int substeps) {
  const std::size_t n = discs.size();
  std::vector<Disc> s = discs;
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return s[a].id < s[b].id; });

  CollisionSimulation out;
  out.trajectories.assign(n, {});
  auto record = [&] {
    for (std::size_t i = 0; i < n; ++i) out.trajectories[i].push_back({s[i].x, s[i].y, true, -1});
  };
  record();
  long step = 0;
  for (int t = 1; t < frames; ++t) {
    for (int k = 0; k < substeps; ++k, ++step) {
      for (auto& d : s) {
        d.x += d.vx / substeps;
        d.y += d.vy / substeps;
        if (d.x < d.radius) { d.x = 2 * d.radius - d.x; d.vx = -d.vx; }
        if (d.x > arena - d.radius) { d.x = 2 * (arena - d.radius) - d.x; d.vx = -d.vx; }
        if (d.y < d.radius) { d.y = 2 * d.radius - d.y; d.vy = -d.vy; }
        if (d.y > arena - d.radius) { d.y = 2 * (arena - d.radius) - d.y; d.vy = -d.vy; }
      }
      for (std::size_t oi = 0; oi < n; ++oi) {
        for (std::size_t oj = oi + 1; oj < n; ++oj) {
          auto& a = s[order[oi]];
          auto& b = s[order[oj]];
          const double dx = b.x - a.x, dy = b.y - a.y;
          const double dist2 = dx * dx + dy * dy;
          const double reach = a.radius + b.radius;
          if (dist2 >= reach * reach || dist2 == 0.0) continue;
          const double dist = std::sqrt(dist2);
          const double nx = dx / dist, ny = dy / dist;
          const double approach = (b.vx - a.vx) * nx + (b.vy - a.vy) * ny;
          if (approach >= 0.0) continue;
          a.vx += approach * nx;
          a.vy += approach * ny;
          b.vx -= approach * nx;
          b.vy -= approach * ny;
          out.events.push_back({t, a.id, b.id, step});
        }
      }
    }
    record();
  }
  for (const auto& d : s) out.final_velocities.push_back({d.vx, d.vy});
  return out;
}

std::vector<std::pair<int, int>> causal_edges(const std::vector<CollisionEvent>& events) {
  std::vector<std::pair<int, int>> edges;
  for (int i = 0; i < static_cast<int>(events.size()); ++i) {
    for (int j = 0; j < static_cast<int>(events.size()); ++j) {
      const auto& e1 = events[static_cast<std::size_t>(i)];
      const auto& e2 = events[static_cast<std::size_t>(j)];
      if (e1.substep >= e2.substep) continue;
      if (e1.a == e2.a || e1.a == e2.b || e1.b == e2.a || e1.b == e2.b) edges.emplace_back(i, j);
    }
  }
  return edges;
}

std::vector<int> event_ancestors(const std::vector<CollisionEvent>& events,
                                 const std::vector<std::pair<int, int>>& edges, int target) {
  std::vector<bool> seen(events.size(), false);
  std::vector<int> stack{target};
  while (!stack.empty()) {
    const int cur = stack.back();
    stack.pop_back();
    for (const auto& [from, to] : edges) {
      if (to == cur && !seen[static_cast<std::size_t>(from)]) {
        seen[static_cast<std::size_t>(from)] = true;
        stack.push_back(from);
      }
    }
  }
  std::vector<int> out;
  for (int i = 0; i < static_cast<int>(seen.size()); ++i) {
    if (seen[static_cast<std::size_t>(i)]) out.push_back(i);
  }
  return out;
}

bool pair_collides(const std::vector<CollisionEvent>& events, int a, int b) {
  if (a > b) std::swap(a, b);
  return std::any_of(events.begin(), events.end(), [&](const auto& e) { return e.a == a && e.b == b; });
}

namespace {

struct Scene {
  std::vector<SceneObject> objects;
  std::vector<Disc> discs;
};

Scene sample_scene(const CollisionConfig& cfg, Rng& rng) {
  Scene scene;
  std::vector<int> colors(kNumObjectColors);
  for (int i = 0; i < kNumObjectColors; ++i) colors[static_cast<std::size_t>(i)] = i;
  std::shuffle(colors.begin(), colors.end(), rng);
  for (int id = 0; id < cfg.objects; ++id) {
    SceneObject o;
    o.id = id;
    o.color = colors[static_cast<std::size_t>(id)];
    o.shape = uniform_int(rng, 0, 2);
    o.size = uniform_int(rng, 0, 1);
    o.radius = o.size == 0 ? 0.5 : 0.7;
    Disc d;
    d.id = id;
    d.radius = o.radius;
    bool placed = false;
    for (int attempt = 0; attempt < 1000 && !placed; ++attempt) {
      d.x = uniform(rng, d.radius, cfg.arena - d.radius);
      d.y = uniform(rng, d.radius, cfg.arena - d.radius);
      placed = std::all_of(scene.discs.begin(), scene.discs.end(), [&](const Disc& other) {
        return std::hypot(other.x - d.x, other.y - d.y) > other.radius + d.radius + 0.1;
      });
    }
    if (!placed) throw ConfigError("collision: could not place objects; arena too small");
    if (!bernoulli(rng, cfg.static_probability)) {
      const double speed = uniform(rng, cfg.min_speed, cfg.max_speed);
      const double angle = uniform(rng, 0.0, 2.0 * std::numbers::pi);
      d.vx = speed * std::cos(angle);
      d.vy = speed * std::sin(angle);
    }
    scene.objects.push_back(o);
    scene.discs.push_back(d);
  }
  // Aim one moving object at another so that most scenes contain contact.
  if (cfg.objects >= 2 && bernoulli(rng, 0.7)) {
    const int a = uniform_int(rng, 0, cfg.objects - 1);
    int b = uniform_int(rng, 0, cfg.objects - 2);
    if (b >= a) ++b;
    auto& da = scene.discs[static_cast<std::size_t>(a)];
    const auto& db = scene.discs[static_cast<std::size_t>(b)];
    const double speed = uniform(rng, cfg.min_speed, cfg.max_speed);
    const double dx = db.x - da.x, dy = db.y - da.y, len = std::hypot(dx, dy);
    da.vx = speed * dx / len;
    da.vy = speed * dy / len;
  }
  return scene;
}

std::vector<int> describe(const SceneObject& o) {
  return {Vocab::id("the"), Vocab::color_token(o.color), Vocab::shape_token(o.shape)};
}

std::vector<int> pair_choice(const std::vector<SceneObject>& objs, int a, int b) {
  auto out = describe(objs[static_cast<std::size_t>(a)]);
  out.push_back(Vocab::id("collides"));
  out.push_back(Vocab::id("with"));
  auto rhs = describe(objs[static_cast<std::size_t>(b)]);
  out.insert(out.end(), rhs.begin(), rhs.end());
  return out;
}

std::vector<int> words(std::initializer_list<const char*> ws) {
  std::vector<int> out;
  for (auto* w : ws) out.push_back(Vocab::id(w));
  return out;
}

void append(std::vector<int>& dst, const std::vector<int>& src) { dst.insert(dst.end(), src.begin(), src.end()); }

// Chooses up to `count` pairs, roughly half drawn from `positives`.
std::vector<std::pair<int, int>> pick_pairs(const std::set<std::pair<int, int>>& positives,
                                            const std::vector<std::pair<int, int>>& universe, int count,
                                            Rng& rng) {
  std::vector<std::pair<int, int>> pos(positives.begin(), positives.end());
  std::vector<std::pair<int, int>> neg;
  for (const auto& p : universe) {
    if (!positives.count(p)) neg.push_back(p);
  }
  std::shuffle(pos.begin(), pos.end(), rng);
  std::shuffle(neg.begin(), neg.end(), rng);
  const int want_pos = std::min<int>(static_cast<int>(pos.size()), uniform_int(rng, 0, (count + 1) / 2 + 1));
  std::vector<std::pair<int, int>> out(pos.begin(), pos.begin() + std::min<int>(want_pos, count));
  for (std::size_t i = 0; i < neg.size() && static_cast<int>(out.size()) < count; ++i) out.push_back(neg[i]);
  for (std::size_t i = static_cast<std::size_t>(want_pos); i < pos.size() && static_cast<int>(out.size()) < count; ++i) {
    out.push_back(pos[i]);
  }
  std::shuffle(out.begin(), out.end(), rng);
  return out;
}

QuestionCategory draw_category(const CollisionConfig& cfg, Rng& rng) {
  std::discrete_distribution<int> dist(cfg.category_weights.begin(), cfg.category_weights.end());
  static constexpr QuestionCategory kOrder[] = {QuestionCategory::Descriptive, QuestionCategory::Explanatory,
                                                QuestionCategory::Predictive, QuestionCategory::Counterfactual};
  return kOrder[dist(rng)];
}

}  // namespace

Episode gen_collision_episode(const CollisionConfig& config, std::uint64_t seed) {
  config.validate();
  Rng rng(derive_seed(seed, 0));
  const QuestionCategory category = draw_category(config, rng);
  const bool controlled = category == QuestionCategory::Counterfactual && config.cf_disconnected_fraction >= 0.0;
  const bool want_disconnected = controlled && bernoulli(rng, config.cf_disconnected_fraction);
  const int total_frames = config.frames + config.future_frames;

  for (int attempt = 0; attempt < 10000; ++attempt) {
    Rng srng(derive_seed(seed, static_cast<std::uint64_t>(attempt) + 1));
    Scene scene = sample_scene(config, srng);
    auto sim = simulate_collisions(scene.discs, config.arena, total_frames, config.substeps);

    Episode ep;
    ep.task = TaskKind::Collision;
    ep.seed = seed;
    ep.num_frames = config.frames;
    ep.num_slots = config.slots();
    ep.height = config.height;
    ep.width = config.width;
    ep.arena = config.arena;
    ep.category = category;
    ep.objects = scene.objects;
    for (std::size_t i = 0; i < ep.objects.size(); ++i) {
      ep.objects[i].trajectory.assign(sim.trajectories[i].begin(), sim.trajectories[i].begin() + config.frames);
    }
    auto& ann = ep.annotations;
    for (const auto& d : scene.discs) ann.initial_velocities.push_back({d.vx, d.vy});
    ann.substeps = config.substeps;
    for (const auto& e : sim.events) (e.frame < config.frames ? ann.events : ann.future_events).push_back(e);
    ann.causal_edges = causal_edges(ann.events);

    const auto& objs = ep.objects;
    const int n = config.objects;
    std::vector<std::pair<int, int>> all_pairs;
    for (int a = 0; a < n; ++a) {
      for (int b = a + 1; b < n; ++b) all_pairs.emplace_back(a, b);
    }

    bool ok = true;
    switch (category) {
      case QuestionCategory::Descriptive: {
        if (bernoulli(srng, 0.5)) {
          ep.question = words({"how", "many", "collisions", "are", "there"});
          ep.answer = Vocab::answer_class(Vocab::number_token(static_cast<int>(ann.events.size())));
        } else {
          const int target = uniform_int(srng, 0, n - 1);
          ep.question = words({"what", "color", "is", "the", "object", "that", "collides", "with"});
          append(ep.question, describe(objs[static_cast<std::size_t>(target)]));
          int partner = -1;
          for (const auto& e : ann.events) {
            if (e.a == target || e.b == target) {
              partner = e.a == target ? e.b : e.a;
              break;
            }
          }
          const int tok = partner < 0 ? Vocab::id("none")
                                      : Vocab::color_token(objs[static_cast<std::size_t>(partner)].color);
          ep.answer = Vocab::answer_class(tok);
        }
        break;
      }
      case QuestionCategory::Explanatory: {
        if (ann.events.empty() || n < 3) { ok = false; break; }
        const int target = uniform_int(srng, 0, static_cast<int>(ann.events.size()) - 1);
        const auto& te = ann.events[static_cast<std::size_t>(target)];
        ann.target_event = target;
        ep.question = words({"which", "object", "is", "responsible", "for", "the", "collision", "between"});
        append(ep.question, describe(objs[static_cast<std::size_t>(te.a)]));
        ep.question.push_back(Vocab::id("and"));
        append(ep.question, describe(objs[static_cast<std::size_t>(te.b)]));
        std::set<int> responsible;
        for (int anc : event_ancestors(ann.events, ann.causal_edges, target)) {
          const auto& e = ann.events[static_cast<std::size_t>(anc)];
          for (int o : {e.a, e.b}) {
            if (o != te.a && o != te.b) responsible.insert(o);
          }
        }
        std::vector<int> others;
        for (int o = 0; o < n; ++o) {
          if (o != te.a && o != te.b) others.push_back(o);
        }
        std::shuffle(others.begin(), others.end(), srng);
        others.resize(std::min<std::size_t>(others.size(), static_cast<std::size_t>(config.num_choices)));
        for (int o : others) {
          ep.choices.push_back(describe(objs[static_cast<std::size_t>(o)]));
          ep.choice_answers.push_back(responsible.count(o) ? 1 : 0);
          ann.choice_pairs.emplace_back(o, -1);
        }
        break;
      }
      case QuestionCategory::Predictive: {
        ep.question = words({"which", "collision", "will", "happen", "next"});
        std::set<std::pair<int, int>> future;
        for (const auto& e : ann.future_events) future.emplace(e.a, e.b);
        for (const auto& [a, b] : pick_pairs(future, all_pairs, config.num_choices, srng)) {
          ep.choices.push_back(pair_choice(objs, a, b));
          ep.choice_answers.push_back(future.count({a, b}) ? 1 : 0);
          ann.choice_pairs.emplace_back(a, b);
        }
        break;
      }
      case QuestionCategory::Counterfactual: {
        std::vector<int> candidates;
        for (int o = 0; o < n; ++o) {
          const bool connected = std::any_of(ann.events.begin(), ann.events.end(),
                                             [&](const auto& e) { return e.a == o || e.b == o; });
          if (!controlled || connected != want_disconnected) candidates.push_back(o);
        }
        if (candidates.empty()) { ok = false; break; }
        const int removed = candidates[static_cast<std::size_t>(
            uniform_int(srng, 0, static_cast<int>(candidates.size()) - 1))];
        std::vector<Disc> kept;
        for (const auto& d : scene.discs) {
          if (d.id != removed) kept.push_back(d);
        }
        auto cf = simulate_collisions(kept, config.arena, config.frames, config.substeps);
        ann.removed_object = removed;
        ann.counterfactual_events = cf.events;
        ann.removed_connected = std::any_of(ann.events.begin(), ann.events.end(),
                                            [&](const auto& e) { return e.a == removed || e.b == removed; });
        ep.question = words({"if"});
        append(ep.question, describe(objs[static_cast<std::size_t>(removed)]));
        append(ep.question, words({"is", "removed", "which", "collision", "will", "happen"}));
        std::set<std::pair<int, int>> cf_pairs, fact_pairs;
        for (const auto& e : cf.events) cf_pairs.emplace(e.a, e.b);
        for (const auto& e : ann.events) {
          if (e.a != removed && e.b != removed) fact_pairs.emplace(e.a, e.b);
        }
        std::vector<std::pair<int, int>> universe;
        for (const auto& p : all_pairs) {
          if (p.first != removed && p.second != removed) universe.push_back(p);
        }
        std::set<std::pair<int, int>> interesting = cf_pairs;
        interesting.insert(fact_pairs.begin(), fact_pairs.end());
        bool answerable = true;
        for (const auto& [a, b] : pick_pairs(interesting, universe, config.num_choices, srng)) {
          const int label = cf_pairs.count({a, b}) ? 1 : 0;
          const int factual = pair_collides(ann.events, a, b) ? 1 : 0;
          ep.choices.push_back(pair_choice(objs, a, b));
          ep.choice_answers.push_back(label);
          ann.choice_pairs.emplace_back(a, b);
          ann.factual_choice_labels.push_back(factual);
          answerable = answerable && factual == label;
        }
        ann.descriptive_answerable = answerable;
        break;
      }
      default:
        throw Error("collision: unsupported category");
    }
    if (!ok) continue;
    if (config.render) render_episode(ep);
    return ep;
  }
  throw ConfigError("collision: could not generate a feasible episode; relax the config");
}

}  // namespace objreason
