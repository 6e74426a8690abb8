#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "objreason/harness/ablation.hpp"
#include "objreason/harness/step.hpp"

using namespace objreason;

namespace {

TrainConfig tiny_collision(const std::string& extra = "") {
  return TrainConfig::parse(R"(
task=collision
episodes=60
scene.frames=6
scene.objects=3
scene.future_frames=4
model.layers=1
model.heads=2
model.latent=16
model.head_hidden=16
batch.supervised=4
batch.unsupervised=4
mask.buffer=1
lr.warmup=2
lr.decay=20
lr.max=0.005
steps=6
eval_every=3
seed=3
)" + extra);
}

}  // namespace

TEST_CASE("config parsing rejects bad input") {
  CHECK_THROWS_AS(TrainConfig::parse("tsak=collision\n"), ConfigError);
  CHECK_THROWS_AS(TrainConfig::parse("model.depth=3\n"), ConfigError);
  CHECK_THROWS_AS(TrainConfig::parse("labeled_fraction=0\n"), ConfigError);
  CHECK_THROWS_AS(TrainConfig::parse("batch.supervised=0\n"), ConfigError);
  CHECK_THROWS_AS(TrainConfig::parse("model.attention=mlp\naux.weight=0.1\n"), ConfigError);
  const auto c = TrainConfig::parse("task=snitch\nmask.scheme=d\naux.loss=contrastive\naux.weight=2\n");
  CHECK(c.task == TaskKind::Snitch);
  CHECK(c.scheme == MaskScheme::PredictFrame);
  CHECK(c.aux.kind == AuxLossKind::Contrastive);
  CHECK(c.with("aux.weight", "0").aux.weight == 0.0);
}

TEST_CASE("labeled pool is a fraction of train and the unlabeled pool is all of train") {
  const auto ex = make_experiment(tiny_collision("labeled_fraction=0.5\n"));
  CHECK(ex.splits.unlabeled == ex.splits.train);
  CHECK(static_cast<double>(ex.splits.labeled.size()) == std::round(0.5 * ex.splits.train.size()));
  for (int i : ex.splits.labeled) {
    CHECK(std::find(ex.splits.train.begin(), ex.splits.train.end(), i) != ex.splits.train.end());
  }
  CHECK(ex.heads.size() == 2);
  CHECK(ex.model.slots == 3);
}

TEST_CASE("auxiliary loss leaves word and CLS gradients bit-identical") {
  const auto base = make_experiment(tiny_collision());
  auto with_aux = base;
  with_aux.cfg = base.cfg.with("aux.weight", "0.01");
  for (long step : {0L, 1L, 5L}) {
    const auto a = compute_step(base, base.params, step);
    const auto b = compute_step(with_aux, base.params, step);
    CHECK(a.task == b.task);
    CHECK(b.total != b.task);
    CHECK(b.aux > 0.0);
    for (const char* name : {"embed.words", "embed.cls"}) {
      INFO(name);
      REQUIRE(a.grads.count(name));
      REQUIRE(b.grads.count(name));
      CHECK(a.grads.at(name) == b.grads.at(name));
    }
    CHECK(a.grads.count("aux.weight") == 0);
    REQUIRE(b.grads.count("aux.weight") == 1);
    CHECK(b.grads.at("aux.weight").norm() > 0.0f);
    // the transformer does see the auxiliary signal
    CHECK(a.grads.at("proj.weight") != b.grads.at("proj.weight"));
  }
}

TEST_CASE("training is reproducible byte for byte") {
  const auto cfg = tiny_collision("aux.weight=0.1\n");
  const auto one = train(cfg);
  const auto two = train(cfg);
  CHECK(one.log.size() == 2);
  CHECK(one.log_text() == two.log_text());
  CHECK(train(cfg.with("seed", "4")).log_text() != one.log_text());
  for (const auto& rec : one.log) {
    CHECK(rec.accuracy >= 0.0);
    CHECK(rec.accuracy <= 1.0);
    if (rec.mc_per_question >= 0) CHECK(rec.mc_per_question <= rec.mc_per_option);
  }
}

TEST_CASE("checkpoint round trip preserves evaluation exactly") {
  const auto dir = (std::filesystem::temp_directory_path() / "objreason_harness_ckpt").string();
  std::filesystem::remove_all(dir);
  const auto cfg = tiny_collision("out=" + dir + "\n");
  const auto ex = make_experiment(cfg);
  const auto res = train(ex);
  const auto before = evaluate(ex, res.params, "test", res.step);
  const auto after = evaluate_checkpoint(dir + "/final.ckpt", "test");
  CHECK(before.metrics.to_line() == after.metrics.to_line());
  REQUIRE(before.predictions.size() == after.predictions.size());
  for (std::size_t k = 0; k < before.predictions.size(); ++k) {
    CHECK(before.predictions[k].predicted == after.predictions[k].predicted);
    CHECK(before.predictions[k].choices == after.predictions[k].choices);
  }
  CHECK(std::filesystem::exists(dir + "/metrics.jsonl"));
  const auto ckpt = load_checkpoint(dir + "/final.ckpt");
  CHECK(ckpt.step == 6);
  CHECK(import_state(ckpt).m.size() > 0);
  std::filesystem::remove_all(dir);
}

TEST_CASE("scoring: perfect predictions, binomial chance level, grid distance") {
  const auto ex = make_experiment(tiny_collision());
  std::vector<Prediction> perfect;
  for (int i = 0; i < static_cast<int>(ex.data->episodes.size()); ++i) {
    const auto& ep = ex.episode(i);
    Prediction p;
    p.episode = i;
    p.predicted = ep.answer;
    p.choices = ep.choice_answers;
    perfect.push_back(p);
  }
  const auto m = score_predictions(ex.data->episodes, perfect, 4);
  CHECK(m.accuracy == 1.0);
  CHECK(m.mc_per_question == 1.0);
  CHECK(m.mc_per_option == 1.0);
  for (const auto& [k, v] : m.by_category) CHECK(v == 1.0);

  // uniform random ternary answers on a balanced set
  std::vector<Episode> blickets(3000);
  Rng rng(9);
  std::vector<Prediction> guesses;
  for (int i = 0; i < 3000; ++i) {
    blickets[static_cast<std::size_t>(i)].task = TaskKind::Blicket;
    blickets[static_cast<std::size_t>(i)].answer = i % 3;
    guesses.push_back({i, false, uniform_int(rng, 0, 2), {}, {}});
  }
  const double acc = score_predictions(blickets, guesses, 4).accuracy;
  const double sigma = std::sqrt((1.0 / 3) * (2.0 / 3) / 3000);
  CHECK(std::abs(acc - 1.0 / 3) < 3 * sigma);

  std::vector<Episode> snitch(1);
  snitch[0].task = TaskKind::Snitch;
  snitch[0].answer = 5;
  std::vector<Prediction> off = {{0, false, 6, {}, {6, 5, 1, 2, 3}}};
  const auto s = score_predictions(snitch, off, 4);
  CHECK(s.mean_l1 == 1.0);
  CHECK(s.top1 == 0.0);
  CHECK(s.top5 == 1.0);
}

TEST_CASE("evaluation errors") {
  auto cfg = tiny_collision("val_fraction=0\n");
  const auto ex = make_experiment(cfg);
  CHECK_THROWS_AS(evaluate(ex, ex.params, "val"), ConfigError);
  CHECK_THROWS_AS(evaluate(ex, ex.params, "holdout"), ConfigError);
  CHECK_THROWS_AS(make_experiment(TrainConfig::parse("task=snitch\ndata=/nonexistent/dir\n")), Error);
}

TEST_CASE("ablation suite enumeration") {
  const auto variants = ablation_variants(tiny_collision(), 6);
  int reference = 0, arch = 0, selfsup = 0;
  for (const auto& v : variants) {
    reference += v.group == "reference";
    arch += v.group == "architecture";
    if (v.group == "selfsup") {
      ++selfsup;
      CHECK(v.cfg.labeled_fraction == 0.5);
      CHECK(v.cfg.aux.weight > 0.0);
      CHECK(v.cfg.seed == 3);
    }
  }
  CHECK(reference == 1);
  CHECK(arch == 4);
  CHECK(selfsup == 12);
}
