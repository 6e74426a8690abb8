#include <doctest.h>

#include <filesystem>
#include <map>
#include <set>

#include "objreason/numerics/error.hpp"
#include "objreason/scenes/blicket.hpp"
#include "objreason/scenes/collision.hpp"
#include "objreason/scenes/dataset.hpp"
#include "objreason/scenes/render.hpp"
#include "objreason/scenes/snitch.hpp"
#include "objreason/scenes/vocab.hpp"

using namespace objreason;

namespace {

CollisionConfig counterfactual_only() {
  CollisionConfig c;
  c.category_weights = {0, 0, 0, 1};
  c.render = false;
  return c;
}

// Independent blicket oracle: enumerate every assignment consistent with
// the context panels.
BlicketAnswer enumerate_answer(int n, const BlicketEvidence& ev, const std::vector<int>& query) {
  bool some_yes = false, some_no = false;
  for (int h = 0; h < (1 << n); ++h) {
    bool consistent = true;
    for (std::size_t p = 0; p < ev.panels.size() && consistent; ++p) {
      bool on = false;
      for (int o : ev.panels[p]) on = on || ((h >> o) & 1);
      consistent = on == ev.lit[p];
    }
    if (!consistent) continue;
    bool on = false;
    for (int o : query) on = on || ((h >> o) & 1);
    (on ? some_yes : some_no) = true;
  }
  if (some_yes && !some_no) return BlicketAnswer::Yes;
  if (some_no && !some_yes) return BlicketAnswer::No;
  return BlicketAnswer::Undetermined;
}

void check_masks(const Episode& ep) {
  for (int t = 0; t < ep.num_frames; ++t) {
    const auto& img = ep.frames[static_cast<std::size_t>(t)];
    const auto& lab = ep.masks[static_cast<std::size_t>(t)];
    // Every visible object's own footprint is claimed by some object.
    for (std::size_t k = 0; k < ep.objects.size(); ++k) {
      std::vector<SceneObject> alone{ep.objects[k]};
      alone[0].layer = 0;
      const auto solo = render_frame(alone, t, ep.height, ep.width, ep.arena);
      for (int r = 0; r < ep.height; ++r) {
        for (int c = 0; c < ep.width; ++c) {
          if (solo.masks.at(r, c) != 0) REQUIRE(lab.at(r, c) != 0);
        }
      }
    }
    // Recomposition from the partition reproduces the image.
    for (int r = 0; r < ep.height; ++r) {
      for (int c = 0; c < ep.width; ++c) {
        const int l = lab.at(r, c);
        const auto rgb = l == 0 ? kBackground : palette(ep.objects[static_cast<std::size_t>(l - 1)].color_at(t));
        for (int ch = 0; ch < 3; ++ch) REQUIRE(img.at(r, c, ch) == rgb[static_cast<std::size_t>(ch)]);
      }
    }
  }
}

}  // namespace

TEST_CASE("vocab stays small and round-trips") {
  CHECK(Vocab::size() <= 64);
  for (int id = 0; id < Vocab::size(); ++id) CHECK(Vocab::id(Vocab::token(id)) == id);
  CHECK_THROWS(Vocab::id("zebra"));
}

TEST_CASE("generation is a pure function of config and seed") {
  CollisionConfig c;
  CHECK(episode_to_json(gen_collision_episode(c, 17)).dump() == episode_to_json(gen_collision_episode(c, 17)).dump());
  CHECK(episode_to_json(gen_snitch_episode({}, 17)).dump() == episode_to_json(gen_snitch_episode({}, 17)).dump());
  CHECK(episode_to_json(gen_blicket_episode({}, 17)).dump() == episode_to_json(gen_blicket_episode({}, 17)).dump());
  CHECK(episode_to_json(gen_collision_episode(c, 17)).dump() != episode_to_json(gen_collision_episode(c, 18)).dump());
}

TEST_CASE("dataset records round-trip through JSON lines") {
  const auto dir = (std::filesystem::temp_directory_path() / "objreason_scenes_test").string();
  std::vector<Episode> eps{gen_collision_episode({}, 1), gen_snitch_episode({}, 2), gen_blicket_episode({}, 3)};
  write_dataset(dir, eps, {{"count", 3}});
  const auto back = read_episodes(dir);
  REQUIRE(back.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) CHECK(episode_to_json(back[i]).dump() == episode_to_json(eps[i]).dump());
  CHECK(read_manifest(dir)["count"] == 3);
  std::filesystem::remove_all(dir);
}

TEST_CASE("head-on collision swaps velocities") {
  std::vector<Disc> discs = {{0, 2.0, 4.0, 0.5, 0.0, 0.5}, {1, 6.0, 4.0, -0.5, 0.0, 0.5}};
  const auto sim = simulate_collisions(discs, 8.0, 8, 4);
  REQUIRE(sim.events.size() == 1);
  CHECK(sim.events[0].a == 0);
  CHECK(sim.events[0].b == 1);
  CHECK(sim.final_velocities[0][0] == doctest::Approx(-0.5));
  CHECK(sim.final_velocities[1][0] == doctest::Approx(0.5));
}

TEST_CASE("removing a disc that never collides leaves the event list unchanged") {
  std::vector<Disc> discs = {{0, 2.0, 4.0, 0.5, 0.0, 0.5}, {1, 6.0, 4.0, -0.5, 0.0, 0.5}, {2, 4.0, 7.0, 0.3, 0.0, 0.5}};
  const auto full = simulate_collisions(discs, 8.0, 12, 4);
  const auto without = simulate_collisions({discs[0], discs[1]}, 8.0, 12, 4);
  CHECK(full.events == without.events);

  const auto cfg = counterfactual_only();
  int checked = 0;
  for (std::uint64_t s = 0; s < 300; ++s) {
    const auto ep = gen_collision_episode(cfg, s);
    if (ep.annotations.removed_connected) continue;
    CHECK(ep.annotations.counterfactual_events == ep.annotations.events);
    ++checked;
  }
  CHECK(checked > 20);
}

TEST_CASE("collision labels are re-derived by re-running the simulator") {
  CollisionConfig cfg;
  cfg.render = false;
  for (std::uint64_t s = 0; s < 300; ++s) {
    const auto ep = gen_collision_episode(cfg, s);
    if (ep.category == QuestionCategory::Predictive || ep.category == QuestionCategory::Counterfactual) {
      REQUIRE(ep.choices.size() == ep.choice_answers.size());
      for (std::size_t k = 0; k < ep.choices.size(); ++k) {
        const auto [a, b] = ep.annotations.choice_pairs[k];
        const auto& evs = ep.category == QuestionCategory::Predictive ? ep.annotations.future_events
                                                                      : ep.annotations.counterfactual_events;
        CHECK(ep.choice_answers[k] == (pair_collides(evs, a, b) ? 1 : 0));
      }
    }
    if (ep.category == QuestionCategory::Counterfactual) {
      CHECK(ep.annotations.removed_connected ==
            std::any_of(ep.annotations.events.begin(), ep.annotations.events.end(), [&](const auto& e) {
              return e.a == ep.annotations.removed_object || e.b == ep.annotations.removed_object;
            }));
    }
    for (const auto& o : ep.objects) {
      for (const auto& st : o.trajectory) {
        CHECK(st.x >= o.radius - 1e-9);
        CHECK(st.x <= ep.arena - o.radius + 1e-9);
      }
    }
  }
}

TEST_CASE("counterfactual labels reproduce under re-simulation with the removal") {
  const auto cfg = counterfactual_only();
  for (std::uint64_t s = 0; s < 300; ++s) {
    const auto ep = gen_collision_episode(cfg, s);
    const auto& ann = ep.annotations;
    std::vector<Disc> all, kept;
    for (const auto& o : ep.objects) {
      const auto& st = o.trajectory[0];
      const auto& v = ann.initial_velocities[static_cast<std::size_t>(o.id)];
      all.push_back({o.id, st.x, st.y, v[0], v[1], o.radius});
      if (o.id != ann.removed_object) kept.push_back(all.back());
    }
    const auto factual = simulate_collisions(all, ep.arena, ep.num_frames, ann.substeps);
    CHECK(factual.events == ann.events);
    const auto cf = simulate_collisions(kept, ep.arena, ep.num_frames, ann.substeps);
    for (std::size_t k = 0; k < ep.choices.size(); ++k) {
      const auto [a, b] = ann.choice_pairs[k];
      CHECK(a != ann.removed_object);
      CHECK(b != ann.removed_object);
      CHECK(ep.choice_answers[k] == (pair_collides(cf.events, a, b) ? 1 : 0));
    }
  }
}

TEST_CASE("disconnected removal fraction is controllable") {
  auto cfg = counterfactual_only();
  cfg.cf_disconnected_fraction = 0.47;
  int disconnected = 0;
  const int n = 10000;
  for (int s = 0; s < n; ++s) disconnected += gen_collision_episode(cfg, static_cast<std::uint64_t>(s)).annotations.removed_connected ? 0 : 1;
  CHECK(std::abs(disconnected / double(n) - 0.47) <= 0.02);
}

TEST_CASE("infeasible collision configs are rejected") {
  CollisionConfig c;
  c.objects = 6;
  c.arena = 3.0;
  CHECK_THROWS_AS(gen_collision_episode(c, 1), ConfigError);
}

TEST_CASE("rendered masks partition the image") {
  check_masks(gen_collision_episode({}, 5));
  check_masks(gen_snitch_episode({}, 6));
  check_masks(gen_blicket_episode({}, 7));
}

TEST_CASE("empty scene renders background only") {
  const auto f = render_frame({}, 0, 8, 8, 8.0);
  for (int r = 0; r < 8; ++r) {
    for (int c = 0; c < 8; ++c) {
      CHECK(f.masks.at(r, c) == 0);
      CHECK(f.image.at(r, c, 0) == kBackground[0]);
    }
  }
}

TEST_CASE("overlapping objects give the shared pixels to the front one") {
  SceneObject back{0, shape::kCube, 0, 0, 0, 1.5, {{4.0, 4.0, true, -1}}};
  SceneObject front{1, shape::kCube, 2, 0, 1, 1.5, {{4.5, 4.0, true, -1}}};
  const auto f = render_frame({back, front}, 0, 16, 16, 8.0);
  CHECK(f.masks.at(8, 8) == 2);
  CHECK(f.masks.at(8, 5) == 1);
}

TEST_CASE("a never-covered snitch is labeled by its row-major cell") {
  SnitchScript s;
  s.grid = 4;
  s.frames = 6;
  s.start = {{0, 0}, {3, 3}};
  s.is_cone = {false, true};
  s.snitch = 0;
  s.moves = {{0, 0, 2, {1, 2}}};
  const auto ep = snitch_episode_from_script(s, {});
  CHECK(ep.answer == 6);
  CHECK(ep.annotations.snitch_visible_final);
}

TEST_CASE("a covered snitch follows its cone") {
  SnitchScript s;
  s.grid = 4;
  s.frames = 8;
  s.start = {{1, 1}, {3, 3}};
  s.is_cone = {false, true};
  s.snitch = 0;
  s.moves = {{1, 0, 2, {1, 1}}, {1, 3, 2, {1, 3}}};
  const auto traj = simulate_snitch(s);
  for (int t = 2; t < 8; ++t) {
    CHECK_FALSE(traj[0][static_cast<std::size_t>(t)].visible);
    CHECK(traj[0][static_cast<std::size_t>(t)].container == 1);
    CHECK(traj[0][static_cast<std::size_t>(t)].x == traj[1][static_cast<std::size_t>(t)].x);
    CHECK(traj[0][static_cast<std::size_t>(t)].y == traj[1][static_cast<std::size_t>(t)].y);
  }
  const auto ep = snitch_episode_from_script(s, {});
  CHECK(ep.answer == cell_index({1, 3}, 4));
  CHECK_FALSE(ep.annotations.snitch_visible_final);
}

TEST_CASE("snitch generator invariants") {
  SnitchConfig big;
  big.grid = 6;
  CHECK(big.labels() == 36);
  SnitchConfig cfg;
  cfg.render = false;
  int hidden = 0;
  for (std::uint64_t s = 0; s < 300; ++s) {
    const auto ep = gen_snitch_episode(cfg, s);
    CHECK(ep.answer >= 0);
    CHECK(ep.answer < 16);
    const auto& sn = ep.objects[static_cast<std::size_t>(ep.annotations.snitch_id)];
    for (int t = 0; t < ep.num_frames; ++t) {
      const auto& st = sn.trajectory[static_cast<std::size_t>(t)];
      if (st.container >= 0) {
        const auto& c = ep.objects[static_cast<std::size_t>(st.container)].trajectory[static_cast<std::size_t>(t)];
        CHECK(st.x == c.x);
        CHECK(st.y == c.y);
        CHECK_FALSE(st.visible);
      } else {
        CHECK(st.visible);
      }
    }
    hidden += ep.annotations.snitch_visible_final ? 0 : 1;
  }
  CHECK(hidden > 50);
  cfg.containment = false;
  for (std::uint64_t s = 0; s < 200; ++s) CHECK(gen_snitch_episode(cfg, s).annotations.snitch_visible_final);
}

TEST_CASE("blicket worked examples") {
  // Objects 0..2; object 0 is a known blicket.
  BlicketEvidence ev;
  ev.panels = {{0}, {1}, {0, 2}};
  ev.lit = {true, false, true};
  // Verbatim lit panel: direct yes.
  CHECK(blicket_answer(ev, {0, 2}) == BlicketAnswer::Yes);
  CHECK(blicket_reasoning(ev, {0, 2}, BlicketAnswer::Yes) == ReasoningType::Direct);
  // Object 2 only ever sits next to the known blicket: backward-blocked.
  CHECK(blicket_answer(ev, {2}) == BlicketAnswer::Undetermined);
  CHECK(blicket_reasoning(ev, {2}, BlicketAnswer::Undetermined) == ReasoningType::BackwardBlocking);
  // Known blicket with a known non-blicket: screen-off yes.
  CHECK(blicket_answer(ev, {0, 1}) == BlicketAnswer::Yes);
  CHECK(blicket_reasoning(ev, {0, 1}, BlicketAnswer::Yes) == ReasoningType::ScreenOff);
  CHECK(enumerate_answer(3, ev, {0, 1}) == BlicketAnswer::Yes);
  CHECK(blicket_answer(ev, {1}) == BlicketAnswer::No);
}

TEST_CASE("blicket labels equal brute-force enumeration") {
  BlicketConfig cfg;
  cfg.render = false;
  std::map<ReasoningType, int> seen;
  for (std::uint64_t s = 0; s < 2000; ++s) {
    const auto ep = gen_blicket_episode(cfg, s);
    BlicketEvidence ev;
    ev.panels.assign(ep.annotations.panels.begin(), ep.annotations.panels.end() - 1);
    ev.lit = ep.annotations.lit;
    CHECK(ep.answer == static_cast<int>(enumerate_answer(cfg.objects, ev, ep.annotations.panels.back())));
    // The machine lights iff a true blicket sits on the panel.
    for (std::size_t p = 0; p < ev.panels.size(); ++p) {
      bool on = false;
      for (int o : ev.panels[p]) on = on || ep.annotations.blickets[static_cast<std::size_t>(o)];
      CHECK(on == ev.lit[p]);
    }
    ++seen[ep.reasoning];
  }
  CHECK(seen.size() == 4);
}

TEST_CASE("blicket reasoning filter restricts the emitted types") {
  BlicketConfig cfg;
  cfg.render = false;
  cfg.reasoning_types = {ReasoningType::Direct};
  for (std::uint64_t s = 0; s < 200; ++s) {
    const auto ep = gen_blicket_episode(cfg, s);
    CHECK(ep.reasoning == ReasoningType::Direct);
    CHECK(ep.answer != static_cast<int>(BlicketAnswer::Undetermined));
  }
}

TEST_CASE("splits follow the labeled-fraction protocol") {
  BlicketConfig cfg;
  cfg.render = false;
  std::vector<Episode> eps;
  for (std::uint64_t s = 0; s < 1000; ++s) eps.push_back(gen_blicket_episode(cfg, s));
  auto all = make_splits(eps, 1.0, SplitKind::Iid, 0.1, 0.1, 3);
  CHECK(all.labeled == all.unlabeled);
  auto half = make_splits(eps, 0.5, SplitKind::Iid, 0.0, 0.0, 3);
  CHECK(half.labeled.size() == 500);
  CHECK(half.unlabeled.size() == 1000);
  CHECK_THROWS_AS(make_splits(eps, 0.0, SplitKind::Iid, 0.1, 0.1, 3), ConfigError);
  CHECK_THROWS_AS(make_splits(eps, 1.5, SplitKind::Iid, 0.1, 0.1, 3), ConfigError);
  std::set<int> train(all.train.begin(), all.train.end());
  for (int i : all.test) CHECK(train.count(i) == 0);
  for (int i : all.val) CHECK(train.count(i) == 0);
}

TEST_CASE("systematic split keeps test activation counts out of train") {
  BlicketConfig cfg;
  cfg.render = false;
  cfg.split = SplitKind::Systematic;
  cfg.heldout_probability = 0.3;
  std::vector<Episode> eps;
  for (std::uint64_t s = 0; s < 600; ++s) eps.push_back(gen_blicket_episode(cfg, s));
  const auto sp = make_splits(eps, 1.0, SplitKind::Systematic, 0.1, 0.1, 1);
  std::set<int> train_counts, test_counts;
  for (int i : sp.train) train_counts.insert(eps[static_cast<std::size_t>(i)].annotations.lit_contexts);
  for (int i : sp.test) test_counts.insert(eps[static_cast<std::size_t>(i)].annotations.lit_contexts);
  REQUIRE_FALSE(test_counts.empty());
  for (int c : test_counts) CHECK(train_counts.count(c) == 0);

  cfg.split = SplitKind::Compositional;
  eps.clear();
  for (std::uint64_t s = 0; s < 600; ++s) eps.push_back(gen_blicket_episode(cfg, s));
  const auto cp = make_splits(eps, 1.0, SplitKind::Compositional, 0.1, 0.1, 1);
  for (int i : cp.train) {
    for (const auto& o : eps[static_cast<std::size_t>(i)].objects) {
      if (o.shape != shape::kMachine) CHECK_FALSE(heldout_combination(o.shape, o.color));
    }
  }
  REQUIRE_FALSE(cp.test.empty());
}
