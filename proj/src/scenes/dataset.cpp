#include "objreason/scenes/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>

#include "objreason/numerics/error.hpp"
#include "objreason/scenes/blicket.hpp"
#include "objreason/scenes/collision.hpp"
#include "objreason/scenes/snitch.hpp"
#include "objreason/util/random.hpp"

namespace objreason {

using nlohmann::json;

namespace {

json events_json(const std::vector<CollisionEvent>& events) {
  json out = json::array();
  for (const auto& e : events) out.push_back({e.frame, e.a, e.b, e.substep});
  return out;
}

std::vector<CollisionEvent> events_from(const json& j) {
  std::vector<CollisionEvent> out;
  for (const auto& e : j) out.push_back({e[0].get<int>(), e[1].get<int>(), e[2].get<int>(), e[3].get<long>()});
  return out;
}

}  // namespace

json episode_to_json(const Episode& ep) {
  json j;
  j["task"] = to_string(ep.task);
  j["seed"] = ep.seed;
  j["num_frames"] = ep.num_frames;
  j["num_slots"] = ep.num_slots;
  j["height"] = ep.height;
  j["width"] = ep.width;
  j["arena"] = ep.arena;
  json objs = json::array();
  for (const auto& o : ep.objects) {
    json traj = json::array();
    for (const auto& s : o.trajectory) traj.push_back({s.x, s.y, s.visible, s.container, s.color});
    objs.push_back({{"id", o.id}, {"shape", o.shape}, {"color", o.color}, {"size", o.size},
                    {"layer", o.layer}, {"radius", o.radius}, {"trajectory", traj}});
  }
  j["objects"] = objs;
  if (ep.rendered()) {
    json frames = json::array(), masks = json::array();
    for (std::size_t t = 0; t < ep.frames.size(); ++t) {
      const auto& img = ep.frames[t];
      const auto& lab = ep.masks[t];
      json rows = json::array(), mrows = json::array();
      for (int r = 0; r < img.height; ++r) {
        json row = json::array(), mrow = json::array();
        for (int c = 0; c < img.width; ++c) {
          row.push_back({img.at(r, c, 0), img.at(r, c, 1), img.at(r, c, 2)});
          mrow.push_back(lab.at(r, c));
        }
        rows.push_back(std::move(row));
        mrows.push_back(std::move(mrow));
      }
      frames.push_back(std::move(rows));
      masks.push_back(std::move(mrows));
    }
    j["frames"] = std::move(frames);
    j["masks"] = std::move(masks);
  }
  j["question"] = ep.question;
  j["choices"] = ep.choices;
  j["category"] = to_string(ep.category);
  j["answer"] = ep.answer;
  j["choice_answers"] = ep.choice_answers;
  j["reasoning"] = to_string(ep.reasoning);
  j["split_kind"] = to_string(ep.split_kind);
  const auto& a = ep.annotations;
  json ann;
  ann["events"] = events_json(a.events);
  ann["future_events"] = events_json(a.future_events);
  ann["causal_edges"] = a.causal_edges;
  ann["choice_pairs"] = a.choice_pairs;
  ann["removed_object"] = a.removed_object;
  ann["counterfactual_events"] = events_json(a.counterfactual_events);
  ann["removed_connected"] = a.removed_connected;
  ann["descriptive_answerable"] = a.descriptive_answerable;
  ann["factual_choice_labels"] = a.factual_choice_labels;
  ann["target_event"] = a.target_event;
  ann["initial_velocities"] = a.initial_velocities;
  ann["substeps"] = a.substeps;
  ann["snitch_id"] = a.snitch_id;
  ann["snitch_visible_final"] = a.snitch_visible_final;
  ann["grid"] = a.grid;
  ann["blickets"] = a.blickets;
  ann["panels"] = a.panels;
  ann["lit"] = a.lit;
  ann["lit_contexts"] = a.lit_contexts;
  ann["heldout"] = a.heldout;
  ann["machine_activations"] = a.machine_activations;
  j["annotations"] = std::move(ann);
  return j;
}

Episode episode_from_json(const json& j) {
  Episode ep;
  try {
    ep.task = parse_task(j.at("task").get<std::string>());
    ep.seed = j.at("seed").get<std::uint64_t>();
    ep.num_frames = j.at("num_frames").get<int>();
    ep.num_slots = j.at("num_slots").get<int>();
    ep.height = j.at("height").get<int>();
    ep.width = j.at("width").get<int>();
    ep.arena = j.at("arena").get<double>();
    for (const auto& o : j.at("objects")) {
      SceneObject obj;
      obj.id = o.at("id").get<int>();
      obj.shape = o.at("shape").get<int>();
      obj.color = o.at("color").get<int>();
      obj.size = o.at("size").get<int>();
      obj.layer = o.at("layer").get<int>();
      obj.radius = o.at("radius").get<double>();
      for (const auto& s : o.at("trajectory")) {
        obj.trajectory.push_back({s[0].get<double>(), s[1].get<double>(), s[2].get<bool>(), s[3].get<int>(),
                                  s[4].get<int>()});
      }
      ep.objects.push_back(std::move(obj));
    }
    if (j.contains("frames")) {
      const auto& frames = j.at("frames");
      const auto& masks = j.at("masks");
      for (std::size_t t = 0; t < frames.size(); ++t) {
        Image img(ep.height, ep.width);
        LabelMap lab(ep.height, ep.width);
        for (int r = 0; r < ep.height; ++r) {
          for (int c = 0; c < ep.width; ++c) {
            const auto& px = frames[t][static_cast<std::size_t>(r)][static_cast<std::size_t>(c)];
            for (int ch = 0; ch < 3; ++ch) img.at(r, c, ch) = px[static_cast<std::size_t>(ch)].get<std::uint8_t>();
            lab.at(r, c) = masks[t][static_cast<std::size_t>(r)][static_cast<std::size_t>(c)].get<std::uint8_t>();
          }
        }
        ep.frames.push_back(std::move(img));
        ep.masks.push_back(std::move(lab));
      }
    }
    ep.question = j.at("question").get<std::vector<int>>();
    ep.choices = j.at("choices").get<std::vector<std::vector<int>>>();
    ep.category = parse_category(j.at("category").get<std::string>());
    ep.answer = j.at("answer").get<int>();
    ep.choice_answers = j.at("choice_answers").get<std::vector<int>>();
    ep.reasoning = parse_reasoning(j.at("reasoning").get<std::string>());
    ep.split_kind = parse_split_kind(j.at("split_kind").get<std::string>());
    const auto& a = j.at("annotations");
    auto& ann = ep.annotations;
    ann.events = events_from(a.at("events"));
    ann.future_events = events_from(a.at("future_events"));
    ann.causal_edges = a.at("causal_edges").get<std::vector<std::pair<int, int>>>();
    ann.choice_pairs = a.at("choice_pairs").get<std::vector<std::pair<int, int>>>();
    ann.removed_object = a.at("removed_object").get<int>();
    ann.counterfactual_events = events_from(a.at("counterfactual_events"));
    ann.removed_connected = a.at("removed_connected").get<bool>();
    ann.descriptive_answerable = a.at("descriptive_answerable").get<bool>();
    ann.factual_choice_labels = a.at("factual_choice_labels").get<std::vector<int>>();
    ann.target_event = a.at("target_event").get<int>();
    ann.initial_velocities = a.at("initial_velocities").get<std::vector<std::array<double, 2>>>();
    ann.substeps = a.at("substeps").get<int>();
    ann.snitch_id = a.at("snitch_id").get<int>();
    ann.snitch_visible_final = a.at("snitch_visible_final").get<bool>();
    ann.grid = a.at("grid").get<int>();
    ann.blickets = a.at("blickets").get<std::vector<bool>>();
    ann.panels = a.at("panels").get<std::vector<std::vector<int>>>();
    ann.lit = a.at("lit").get<std::vector<bool>>();
    ann.lit_contexts = a.at("lit_contexts").get<int>();
    ann.heldout = a.at("heldout").get<bool>();
    ann.machine_activations = a.at("machine_activations").get<std::vector<int>>();
  } catch (const json::exception& e) {
    throw Error(std::string("malformed episode record: ") + e.what());
  }
  return ep;
}

Episode generate_episode(TaskKind task, const KeyValueConfig& config, std::uint64_t seed) {
  switch (task) {
    case TaskKind::Collision: return gen_collision_episode(CollisionConfig::from(config), seed);
    case TaskKind::Snitch: return gen_snitch_episode(SnitchConfig::from(config), seed);
    case TaskKind::Blicket: return gen_blicket_episode(BlicketConfig::from(config), seed);
  }
  throw Error("unknown task");
}

std::vector<Episode> generate_episodes(TaskKind task, const KeyValueConfig& config, int count,
                                       std::uint64_t seed) {
  std::vector<Episode> out;
  out.reserve(static_cast<std::size_t>(count));
  switch (task) {
    case TaskKind::Collision: {
      const auto c = CollisionConfig::from(config);
      for (int i = 0; i < count; ++i) out.push_back(gen_collision_episode(c, derive_seed(seed, static_cast<std::uint64_t>(i))));
      break;
    }
    case TaskKind::Snitch: {
      const auto c = SnitchConfig::from(config);
      for (int i = 0; i < count; ++i) out.push_back(gen_snitch_episode(c, derive_seed(seed, static_cast<std::uint64_t>(i))));
      break;
    }
    case TaskKind::Blicket: {
      const auto c = BlicketConfig::from(config);
      for (int i = 0; i < count; ++i) out.push_back(gen_blicket_episode(c, derive_seed(seed, static_cast<std::uint64_t>(i))));
      break;
    }
  }
  return out;
}

Splits make_splits(const std::vector<Episode>& episodes, double labeled_fraction, SplitKind kind,
                   double val_fraction, double test_fraction, std::uint64_t seed) {
  if (!(labeled_fraction > 0.0 && labeled_fraction <= 1.0)) {
    throw ConfigError("labeled fraction must be in (0, 1]");
  }
  if (val_fraction < 0 || test_fraction < 0 || val_fraction + test_fraction >= 1.0) {
    throw ConfigError("val/test fractions must be nonnegative and sum below 1");
  }
  Rng rng(derive_seed(seed, 0x5b11));
  Splits s;
  std::vector<int> pool, held;
  for (int i = 0; i < static_cast<int>(episodes.size()); ++i) {
    const bool h = kind != SplitKind::Iid && episodes[static_cast<std::size_t>(i)].annotations.heldout;
    (h ? held : pool).push_back(i);
  }
  std::shuffle(pool.begin(), pool.end(), rng);
  std::shuffle(held.begin(), held.end(), rng);
  if (kind == SplitKind::Iid) {
    const auto n = pool.size();
    const auto nv = static_cast<std::size_t>(std::llround(val_fraction * static_cast<double>(n)));
    const auto nt = static_cast<std::size_t>(std::llround(test_fraction * static_cast<double>(n)));
    s.val.assign(pool.begin(), pool.begin() + static_cast<long>(nv));
    s.test.assign(pool.begin() + static_cast<long>(nv), pool.begin() + static_cast<long>(nv + nt));
    s.train.assign(pool.begin() + static_cast<long>(nv + nt), pool.end());
  } else {
    const double share = val_fraction + test_fraction > 0 ? val_fraction / (val_fraction + test_fraction) : 0.5;
    const auto nv = static_cast<std::size_t>(std::llround(share * static_cast<double>(held.size())));
    s.val.assign(held.begin(), held.begin() + static_cast<long>(nv));
    s.test.assign(held.begin() + static_cast<long>(nv), held.end());
    s.train = pool;
  }
  s.unlabeled = s.train;
  const auto nl = static_cast<std::size_t>(std::llround(labeled_fraction * static_cast<double>(s.train.size())));
  s.labeled.assign(s.train.begin(), s.train.begin() + static_cast<long>(std::min(nl, s.train.size())));
  return s;
}

void write_dataset(const std::string& dir, const std::vector<Episode>& episodes, const json& manifest) {
  std::filesystem::create_directories(dir);
  std::ofstream out(dir + "/episodes.jsonl");
  if (!out) throw Error("cannot write " + dir + "/episodes.jsonl");
  for (const auto& ep : episodes) out << episode_to_json(ep).dump() << '\n';
  std::ofstream mf(dir + "/manifest.json");
  if (!mf) throw Error("cannot write " + dir + "/manifest.json");
  mf << manifest.dump(2) << '\n';
}

std::vector<Episode> read_episodes(const std::string& dir) {
  std::ifstream in(dir + "/episodes.jsonl");
  if (!in) throw Error("cannot read " + dir + "/episodes.jsonl");
  std::vector<Episode> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    out.push_back(episode_from_json(json::parse(line)));
  }
  return out;
}

json read_manifest(const std::string& dir) {
  std::ifstream in(dir + "/manifest.json");
  if (!in) throw Error("cannot read " + dir + "/manifest.json");
  return json::parse(in);
}

}  // namespace objreason
