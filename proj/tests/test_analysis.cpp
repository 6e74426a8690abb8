#include <doctest.h>

#include <cmath>

#include "objreason/analysis.hpp"
#include "objreason/scenes/collision.hpp"

using namespace objreason;

namespace {

/// Frame-major objects, then words, then CLS, with every weight `fill`.
AttentionTrace synthetic_trace(int frames, int slots, int words, int layers, int heads, double fill) {
  AttentionTrace t;
  for (int f = 0; f < frames; ++f) {
    for (int s = 0; s < slots; ++s) t.elements.push_back({Modality::Object, f, s, -1, f});
  }
  for (int w = 0; w < words; ++w) t.elements.push_back({Modality::Word, -1, -1, 10 + w, frames + w});
  t.elements.push_back({Modality::Cls, -1, -1, -1, frames + words});
  const auto L = static_cast<Eigen::Index>(t.elements.size());
  t.weights.assign(static_cast<std::size_t>(layers),
                   std::vector<Matrix<double>>(static_cast<std::size_t>(heads), Matrix<double>::Constant(L, L, fill)));
  return t;
}

TrainConfig tiny(const std::string& extra = "") {
  return TrainConfig::parse(R"(
task=collision
episodes=60
scene.frames=6
scene.objects=3
model.layers=2
model.heads=2
model.latent=16
model.head_hidden=16
mask.buffer=1
seed=5
)" + extra);
}

}  // namespace

TEST_CASE("word attention: ties, single object, totality, chosen maxima") {
  auto t = synthetic_trace(3, 4, 5, 2, 2, 0.1);
  auto map = word_object_attention(t);
  REQUIRE(map.size() == 5);
  for (const auto& w : map) {
    CHECK(w.slot == 0);
    CHECK(w.frame == 0);
  }
  CHECK(map[2].word == 12);
  CHECK(map[2].position == 2);

  // object (frame 2, slot 3) attends most to word 1 in the last layer, head 1
  const int word1 = 12 + 1;
  t.weights[1][1](2 * 4 + 3, word1) = 0.9;
  t.weights[0][1](4 + 1, word1) = 0.95;
  const auto last = word_object_attention(t, -1, 1);
  CHECK(last[1].frame == 2);
  CHECK(last[1].slot == 3);
  CHECK(last[1].weight == 0.9);
  CHECK(word_object_attention(t, 0, 1)[1].slot == 1);
  CHECK(word_object_attention(t, 1, 0)[1].slot == 0);

  const auto single = synthetic_trace(4, 1, 3, 1, 1, 0.25);
  for (const auto& w : word_object_attention(single)) CHECK(w.slot == 0);

  CHECK_THROWS_AS(word_object_attention(t, 2, 0), ConfigError);
  CHECK_THROWS_AS(word_object_attention(t, -3, 0), ConfigError);
  CHECK_THROWS_AS(word_object_attention(t, 0, 2), ConfigError);
  CHECK(word_object_attention(synthetic_trace(2, 2, 0, 1, 1, 0.2)).empty());
}

TEST_CASE("CLS attention: per-frame top-k, nonincreasing, clipped to the slot count") {
  auto t = synthetic_trace(2, 3, 2, 1, 1, 0.0);
  const int cls = static_cast<int>(t.elements.size()) - 1;
  auto& w = t.weights[0][0];
  w(cls, 0) = 0.1, w(cls, 1) = 0.3, w(cls, 2) = 0.2;
  w(cls, 3) = 0.05, w(cls, 4) = 0.05, w(cls, 5) = 0.3;
  const auto top = cls_object_attention(t);
  REQUIRE(top.size() == 2);
  REQUIRE(top[0].size() == 2);
  CHECK(top[0][0].slot == 1);
  CHECK(top[0][1].slot == 2);
  CHECK(top[1][0].slot == 2);
  CHECK(top[1][1].slot == 0);  // tie between slots 0 and 1
  const auto all = cls_object_attention(t, -1, 0, 10);
  for (const auto& frame : all) {
    CHECK(frame.size() == 3);
    for (std::size_t k = 1; k < frame.size(); ++k) CHECK(frame[k - 1].weight >= frame[k].weight);
  }
  CHECK_THROWS_AS(cls_object_attention(t, 0, 1), ConfigError);
}

TEST_CASE("attention traces from a model cover the sequence") {
  const auto ex = make_experiment(tiny());
  int mc = 0;
  while (!ex.episode(mc).multiple_choice()) ++mc;
  const auto& ep = ex.episode(mc);
  const int last = static_cast<int>(ep.choices.size()) - 1;
  const auto trace = attention_trace(ex, ex.params, mc, last);
  CHECK(trace.layers() == 2);
  CHECK(trace.heads() == 2);
  const auto map = word_object_attention(trace);
  CHECK(map.size() == ep.question.size() + ep.choices.back().size());
  for (const auto& w : map) {
    CHECK(w.slot >= 0);
    CHECK(w.slot < 3);
  }
  CHECK(cls_object_attention(trace).size() == 6);
  CHECK_THROWS_AS(attention_trace(ex, ex.params, mc, 99), ConfigError);
}

TEST_CASE("taxonomy agrees with the generator and hits the configured disconnected share") {
  KeyValueConfig kv;
  kv.set("weight.descriptive", "0");
  kv.set("weight.explanatory", "0");
  kv.set("weight.predictive", "0");
  kv.set("cf_disconnected_fraction", "0.47");
  kv.set("render", "false");
  const auto cfg = CollisionConfig::from(kv);
  std::vector<Episode> eps;
  for (int i = 0; i < 1000; ++i) eps.push_back(gen_collision_episode(cfg, derive_seed(77, static_cast<std::uint64_t>(i))));
  const auto r = counterfactual_taxonomy(eps);
  CHECK(r.questions == 1000);
  CHECK(r.generator_disagreements == 0);
  CHECK(r.counts[0] + r.counts[1] + r.counts[2] == r.questions);
  const double share = r.fraction(CounterfactualBucket::Disconnected);
  CHECK(std::abs(share - 0.47) < 4 * std::sqrt(0.47 * 0.53 / 1000));
  CHECK(r.counts[2] > 0);
  for (const auto& ep : eps) {
    const bool disconnected = classify_counterfactual(ep) == CounterfactualBucket::Disconnected;
    CHECK(disconnected == !ep.annotations.removed_connected);
    if (disconnected) CHECK(ep.annotations.descriptive_answerable);
  }
  CHECK(r.accuracy(CounterfactualBucket::Hard) == -1.0);

  // predictions are scored per bucket, all choices must be right
  std::vector<Prediction> preds;
  for (int i = 0; i < 1000; ++i) {
    Prediction p;
    p.episode = i;
    p.choices = eps[static_cast<std::size_t>(i)].choice_answers;
    if (classify_counterfactual(eps[static_cast<std::size_t>(i)]) == CounterfactualBucket::Hard) p.choices[0] ^= 1;
    preds.push_back(p);
  }
  const auto scored = counterfactual_taxonomy(eps, preds);
  CHECK(scored.accuracy(CounterfactualBucket::Disconnected) == 1.0);
  CHECK(scored.accuracy(CounterfactualBucket::Descriptive) == 1.0);
  CHECK(scored.accuracy(CounterfactualBucket::Hard) == 0.0);
  CHECK(scored.to_json()["buckets"]["hard"]["count"] == r.counts[2]);
}

TEST_CASE("taxonomy rules on hand-built episodes") {
  Episode ep;
  ep.category = QuestionCategory::Counterfactual;
  ep.choices = {{1}, {2}};
  ep.choice_answers = {1, 0};
  ep.annotations.choice_pairs = {{0, 1}, {1, 2}};
  ep.annotations.removed_object = 3;
  ep.annotations.events = {{2, 0, 1, 8}};
  CHECK(classify_counterfactual(ep) == CounterfactualBucket::Disconnected);
  ep.annotations.events.push_back({4, 2, 3, 16});
  CHECK(classify_counterfactual(ep) == CounterfactualBucket::Descriptive);
  ep.choice_answers = {0, 0};
  CHECK(classify_counterfactual(ep) == CounterfactualBucket::Hard);
  ep.annotations.removed_object = -1;
  CHECK_THROWS_AS(classify_counterfactual(ep), Error);
  ep.annotations.removed_object = 3;
  ep.annotations.choice_pairs.pop_back();
  CHECK_THROWS_AS(classify_counterfactual(ep), Error);
  ep.category = QuestionCategory::Descriptive;
  CHECK_THROWS_AS(classify_counterfactual(ep), Error);
}

TEST_CASE("alignment: identity is exact, shuffles stay below float noise") {
  const auto ex = make_experiment(tiny());
  std::vector<int> all(60);
  for (int i = 0; i < 60; ++i) all[static_cast<std::size_t>(i)] = i;
  const auto r = alignment_report(ex, ex.params, all, 11);
  CHECK(r.episodes == 60);
  CHECK(r.identity_delta == 0.0);
  CHECK(r.max_delta < 1e-5);
  CHECK(r.max_delta > 0.0);  // the permutations did reorder something
  CHECK(r.label_disagreements == 0);
  CHECK_THROWS_AS(alignment_report(make_experiment(tiny("encoder=hyperpixel\n")), ex.params, all, 1), ConfigError);
}

TEST_CASE("infill table: perfect predictor scores zero, offsets count from the first target frame") {
  Rng rng(3);
  MaskParams mp;
  mp.buffer = 1;
  std::vector<MaskPlan> plans;
  for (int k = 0; k < 20; ++k) plans.push_back(sample_mask_plan(MaskScheme::PredictFrame, 7, 3, rng, mp));
  Matrix<double> truth = Matrix<double>::Random(20 * 21, 5);
  const auto rows = tabulate_infill(truth, truth, plans);
  REQUIRE(!rows.empty());
  CHECK(rows.front().offset == 0);
  int targets = 0;
  for (const auto& row : rows) {
    CHECK(row.mean_l2 == 0.0);
    targets += row.targets;
  }
  int expected = 0;
  for (const auto& p : plans) expected += p.target_count();
  CHECK(targets == expected);

  Matrix<double> off = truth;
  off.col(0).array() += 2.0;
  for (const auto& row : tabulate_infill(off, truth, plans)) CHECK(row.mean_l2 == doctest::Approx(4.0));
  CHECK_THROWS_AS(tabulate_infill(truth.topRows(5), truth, plans), ShapeError);
}

TEST_CASE("infill report with trained readout and least-squares probe") {
  const auto ex = make_experiment(tiny());
  const std::vector<int> eval = {0, 1, 2, 3, 4, 5, 6, 7};
  std::vector<int> probe;
  for (int i = 8; i < 60; ++i) probe.push_back(i);
  const auto trained = infill_report(ex, ex.params, eval);
  const auto probed = infill_report(ex, ex.params, eval, probe);
  CHECK(!trained.probe);
  CHECK(probed.probe);
  REQUIRE(!probed.rows.empty());
  CHECK(probed.rows.front().offset == 0);
  double a = 0, b = 0;
  for (const auto& r : trained.rows) a += r.mean_l2;
  for (const auto& r : probed.rows) b += r.mean_l2;
  // an untrained readout is far off; the fitted probe explains the targets
  CHECK(b < a);
  CHECK(infill_report(ex, ex.params, eval, probe).to_json() == probed.to_json());
}
