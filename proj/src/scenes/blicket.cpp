#include "objreason/scenes/blicket.hpp"

#include <algorithm>

#include "objreason/numerics/error.hpp"
#include "objreason/scenes/render.hpp"
#include "objreason/util/random.hpp"

namespace objreason {

BlicketConfig BlicketConfig::from(const KeyValueConfig& cfg) {
  BlicketConfig c;
  c.objects = cfg.get_int("objects", c.objects);
  c.context_panels = cfg.get_int("context_panels", c.context_panels);
  c.max_panel_objects = cfg.get_int("max_panel_objects", c.max_panel_objects);
  c.max_query_objects = cfg.get_int("max_query_objects", c.max_query_objects);
  c.blicket_probability = cfg.get_double("blicket_probability", c.blicket_probability);
  c.split = parse_split_kind(cfg.get_string("split", to_string(c.split)));
  c.heldout_probability = cfg.get_double("heldout_probability", c.heldout_probability);
  if (cfg.has("heldout_lit_counts")) {
    c.heldout_lit_counts.clear();
    for (const auto& s : cfg.get_list("heldout_lit_counts")) c.heldout_lit_counts.insert(std::stoi(s));
  }
  if (cfg.has("reasoning_types")) {
    for (const auto& s : cfg.get_list("reasoning_types")) c.reasoning_types.insert(parse_reasoning(s));
  }
  c.render = cfg.get_bool("render", c.render);
  c.height = cfg.get_int("height", c.height);
  c.width = cfg.get_int("width", c.width);
  c.validate();
  return c;
}

void BlicketConfig::validate() const {
  if (objects < 2 || objects > 6) throw ConfigError("blicket: objects must be in [2, 6]");
  if (context_panels < 1 || context_panels > 12) throw ConfigError("blicket: context_panels must be in [1, 12]");
  if (max_panel_objects < 1 || max_panel_objects > objects) throw ConfigError("blicket: bad max_panel_objects");
  if (max_query_objects < 1 || max_query_objects > objects) throw ConfigError("blicket: bad max_query_objects");
  if (blicket_probability <= 0 || blicket_probability >= 1) throw ConfigError("blicket: blicket_probability must be in (0, 1)");
  if (heldout_probability < 0 || heldout_probability > 1) throw ConfigError("blicket: heldout_probability must be in [0, 1]");
  for (auto r : reasoning_types) {
    if (r == ReasoningType::None) throw ConfigError("blicket: 'none' is not a reasoning type");
  }
}

namespace {

bool contains(const std::vector<int>& set, int x) { return std::find(set.begin(), set.end(), x) != set.end(); }

std::vector<int> cleared_objects(const BlicketEvidence& ev) {
  std::vector<int> out;
  for (std::size_t p = 0; p < ev.panels.size(); ++p) {
    if (ev.lit[p]) continue;
    for (int o : ev.panels[p]) {
      if (!contains(out, o)) out.push_back(o);
    }
  }
  return out;
}

std::vector<int> known_blickets(const BlicketEvidence& ev, const std::vector<int>& cleared) {
  std::vector<int> out;
  for (std::size_t p = 0; p < ev.panels.size(); ++p) {
    if (!ev.lit[p]) continue;
    std::vector<int> open;
    for (int o : ev.panels[p]) {
      if (!contains(cleared, o)) open.push_back(o);
    }
    if (open.size() == 1 && !contains(out, open[0])) out.push_back(open[0]);
  }
  return out;
}

}  // namespace

BlicketAnswer blicket_answer(const BlicketEvidence& ev, const std::vector<int>& query) {
  const auto cleared = cleared_objects(ev);
  if (std::all_of(query.begin(), query.end(), [&](int o) { return contains(cleared, o); })) {
    return BlicketAnswer::No;
  }
  for (std::size_t p = 0; p < ev.panels.size(); ++p) {
    if (!ev.lit[p]) continue;
    bool any_open = false, inside = true;
    for (int o : ev.panels[p]) {
      if (contains(cleared, o)) continue;
      any_open = true;
      inside = inside && contains(query, o);
    }
    if (any_open && inside) return BlicketAnswer::Yes;
  }
  return BlicketAnswer::Undetermined;
}

ReasoningType blicket_reasoning(const BlicketEvidence& ev, const std::vector<int>& query, BlicketAnswer answer) {
  auto same_set = [&](const std::vector<int>& panel) {
    return panel.size() == query.size() &&
           std::all_of(panel.begin(), panel.end(), [&](int o) { return contains(query, o); });
  };
  if (std::any_of(ev.panels.begin(), ev.panels.end(), same_set)) return ReasoningType::Direct;
  const auto cleared = cleared_objects(ev);
  const auto blickets = known_blickets(ev, cleared);
  if (answer == BlicketAnswer::Undetermined) {
    // Every open query object sat on a lit panel next to a known blicket.
    bool blocked = true;
    for (int o : query) {
      if (contains(cleared, o)) continue;
      bool explained = false;
      for (std::size_t p = 0; p < ev.panels.size(); ++p) {
        if (!ev.lit[p] || !contains(ev.panels[p], o)) continue;
        for (int b : blickets) explained = explained || (b != o && contains(ev.panels[p], b));
      }
      blocked = blocked && explained;
    }
    return blocked ? ReasoningType::BackwardBlocking : ReasoningType::Indirect;
  }
  const bool has_blicket = std::any_of(query.begin(), query.end(), [&](int o) { return contains(blickets, o); });
  const bool has_cleared = std::any_of(query.begin(), query.end(), [&](int o) { return contains(cleared, o); });
  if (has_blicket && has_cleared) return ReasoningType::ScreenOff;
  return ReasoningType::Indirect;
}

bool heldout_combination(int shape_code, int color_code) { return (shape_code + color_code) % 5 == 0; }

namespace {

std::vector<int> random_subset(Rng& rng, int n, int max_size) {
  std::vector<int> all(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) all[static_cast<std::size_t>(i)] = i;
  std::shuffle(all.begin(), all.end(), rng);
  all.resize(static_cast<std::size_t>(uniform_int(rng, 1, max_size)));
  std::sort(all.begin(), all.end());
  return all;
}

}  // namespace

Episode gen_blicket_episode(const BlicketConfig& config, std::uint64_t seed) {
  config.validate();
  Rng rng(derive_seed(seed, 0));
  const bool want_heldout = config.split != SplitKind::Iid && bernoulli(rng, config.heldout_probability);
  const bool only_direct =
      config.reasoning_types.size() == 1 && *config.reasoning_types.begin() == ReasoningType::Direct;
  const int n = config.objects;

  for (int attempt = 0; attempt < 100000; ++attempt) {
    // Appearance: unique (shape, color) per object.
    std::vector<std::pair<int, int>> looks;
    for (int s = 0; s < 3; ++s) {
      for (int c = 0; c < 5; ++c) {
        const bool held = heldout_combination(s, c);
        if (config.split == SplitKind::Compositional && !want_heldout && held) continue;
        looks.emplace_back(s, c);
      }
    }
    std::shuffle(looks.begin(), looks.end(), rng);
    looks.resize(static_cast<std::size_t>(n));
    const bool any_held = std::any_of(looks.begin(), looks.end(),
                                      [](const auto& l) { return heldout_combination(l.first, l.second); });
    if (config.split == SplitKind::Compositional && want_heldout && !any_held) continue;

    std::vector<bool> blicket(static_cast<std::size_t>(n));
    for (auto&& b : blicket) b = bernoulli(rng, config.blicket_probability);
    if (std::none_of(blicket.begin(), blicket.end(), [](bool b) { return b; })) continue;

    BlicketEvidence ev;
    int lit_count = 0;
    for (int p = 0; p < config.context_panels; ++p) {
      auto panel = random_subset(rng, n, config.max_panel_objects);
      const bool lit = std::any_of(panel.begin(), panel.end(), [&](int o) { return blicket[static_cast<std::size_t>(o)]; });
      lit_count += lit ? 1 : 0;
      ev.panels.push_back(std::move(panel));
      ev.lit.push_back(lit);
    }
    if (lit_count == 0) continue;
    if (config.split == SplitKind::Systematic && config.heldout_lit_counts.count(lit_count) != (want_heldout ? 1u : 0u)) {
      continue;
    }

    std::vector<int> query;
    if (only_direct || bernoulli(rng, 0.25)) {
      query = ev.panels[static_cast<std::size_t>(uniform_int(rng, 0, config.context_panels - 1))];
      if (static_cast<int>(query.size()) > config.max_query_objects && !only_direct) continue;
    } else {
      query = random_subset(rng, n, config.max_query_objects);
    }
    const BlicketAnswer answer = blicket_answer(ev, query);
    const ReasoningType reasoning = blicket_reasoning(ev, query, answer);
    if (!config.reasoning_types.empty() && !config.reasoning_types.count(reasoning)) continue;

    Episode ep;
    ep.task = TaskKind::Blicket;
    ep.seed = seed;
    ep.num_frames = config.context_panels + 1;
    ep.num_slots = config.slots();
    ep.height = config.height;
    ep.width = config.width;
    ep.arena = 8.0;
    ep.answer = static_cast<int>(answer);
    ep.reasoning = reasoning;
    ep.split_kind = config.split;
    auto& ann = ep.annotations;
    ann.blickets = blicket;
    ann.panels = ev.panels;
    ann.panels.push_back(query);
    ann.lit = ev.lit;
    ann.lit_contexts = lit_count;
    ann.heldout = config.split == SplitKind::Compositional ? any_held
                  : config.split == SplitKind::Systematic  ? want_heldout
                                                           : false;
    for (int p = 0; p < config.context_panels; ++p) {
      if (ev.lit[static_cast<std::size_t>(p)]) ann.machine_activations.push_back(p);
    }

    const double spacing = ep.arena / (n + 1);
    for (int o = 0; o < n; ++o) {
      SceneObject obj;
      obj.id = o;
      obj.shape = looks[static_cast<std::size_t>(o)].first;
      obj.color = looks[static_cast<std::size_t>(o)].second;
      obj.radius = 0.6;
      for (int t = 0; t < ep.num_frames; ++t) {
        const bool on = contains(ann.panels[static_cast<std::size_t>(t)], o);
        obj.trajectory.push_back({spacing * (o + 1), ep.arena * 0.35, on, -1});
      }
      ep.objects.push_back(std::move(obj));
    }
    SceneObject machine;
    machine.id = n;
    machine.shape = shape::kMachine;
    machine.radius = 2.5;
    machine.color = color::kUnknown;
    for (int t = 0; t < ep.num_frames; ++t) {
      const int shade = t < config.context_panels
                            ? (ev.lit[static_cast<std::size_t>(t)] ? color::kLit : color::kUnlit)
                            : color::kUnknown;
      machine.trajectory.push_back({ep.arena * 0.5, ep.arena * 0.75, true, -1, shade});
    }
    ep.objects.push_back(std::move(machine));
    if (config.render) render_episode(ep);
    return ep;
  }
  throw ConfigError("blicket: could not satisfy the requested reasoning types / hold-out");
}

}  // namespace objreason
