#include <doctest.h>

#include <cmath>

#include "objreason/selfsup/aux_loss.hpp"

using namespace objreason;
using Mat = Matrix<double>;

namespace {

Mat random_matrix(int rows, int cols, std::uint64_t seed) {
  Rng rng(seed);
  std::normal_distribution<double> n(0.0, 1.0);
  Mat m(rows, cols);
  for (Eigen::Index k = 0; k < m.size(); ++k) m.data()[k] = n(rng);
  return m;
}

ParamStore<double> aux_params(const Mat& weight) {
  ParamStore<double> p;
  p.add("aux.weight", weight);
  p.add("aux.bias", Mat::Zero(1, weight.cols()));
  return p;
}

MaskPlan single_target(int frames, int slots, int t, int i) {
  auto p = MaskPlan::visible(frames, slots);
  p.scheme = MaskScheme::Random;
  p.keep[static_cast<std::size_t>(t * slots + i)] = 0;
  p.target[static_cast<std::size_t>(t * slots + i)] = 1;
  return p;
}

}  // namespace

TEST_CASE("scheme a hides exactly one slot per frame") {
  Rng rng(1);
  const auto p = sample_mask_plan(MaskScheme::OnePerFrame, 3, 2, rng);
  for (int t = 0; t < 3; ++t) CHECK((!p.kept(t, 0)) + (!p.kept(t, 1)) == 1);
  CHECK(p.target_count() == 3);
  CHECK(check_mask_plan(p).empty());
}

TEST_CASE("scheme d with a fixed cutoff") {
  Rng rng(2);
  MaskParams mp;
  mp.cutoff = 5;
  const auto p = sample_mask_plan(MaskScheme::PredictFrame, 10, 3, rng, mp);
  for (int t = 0; t < 10; ++t) {
    for (int i = 0; i < 3; ++i) {
      CHECK(p.kept(t, i) == (t < 5));
      CHECK(p.is_target(t, i) == (t >= 8));
    }
  }
  CHECK(mask_plan_to_json(p)["target_frames"] == nlohmann::json::array({8, 10}));
}

TEST_CASE("mask plan laws hold for 1e5 plans of every scheme") {
  constexpr int kPlans = 100000;
  for (auto scheme : kAllMaskSchemes) {
    Rng rng(derive_seed(77, static_cast<std::uint64_t>(scheme)));
    int violations = 0;
    long hidden = 0, cells = 0;
    for (int k = 0; k < kPlans; ++k) {
      const auto p = sample_mask_plan(scheme, 10, 4, rng);
      if (!check_mask_plan(p).empty()) ++violations;
      for (auto m : p.keep) hidden += !m;
      cells += static_cast<long>(p.keep.size());
    }
    INFO("scheme " << to_string(scheme));
    CHECK(violations == 0);
    if (scheme == MaskScheme::Random) CHECK(std::abs(double(hidden) / double(cells) - 0.15) < 0.005);
  }
}

TEST_CASE("law checker rejects broken plans") {
  Rng rng(3);
  auto p = sample_mask_plan(MaskScheme::PredictSlot, 8, 2, rng);
  p.keep[static_cast<std::size_t>(p.cutoff * 2)] = 1;
  CHECK_FALSE(check_mask_plan(p).empty());
  auto q = sample_mask_plan(MaskScheme::OnePerFrame, 4, 3, rng);
  q.keep.assign(q.keep.size(), 1);
  CHECK_FALSE(check_mask_plan(q).empty());
}

TEST_CASE("mask sampling errors") {
  Rng rng(4);
  CHECK_THROWS_AS(parse_mask_scheme("g"), ConfigError);
  CHECK(parse_mask_scheme("e") == MaskScheme::InfillSlot);
  CHECK_THROWS_AS(sample_mask_plan(MaskScheme::PredictSlot, 4, 2, rng), ConfigError);
  CHECK_NOTHROW(sample_mask_plan(MaskScheme::PredictSlot, 5, 2, rng));
  CHECK_THROWS_AS(sample_mask_plan(MaskScheme::InfillFrame, 8, 2, rng), ConfigError);
  CHECK(check_mask_plan(sample_mask_plan(MaskScheme::InfillFrame, 9, 2, rng)).empty());
}

TEST_CASE("apply_mask") {
  SlotTensor<double> s{3, 2, 4, random_matrix(6, 4, 5), {{0, 1}, {0, 1}, {0, 1}}, EncoderKind::Oracle};
  CHECK(apply_mask(s, MaskPlan::visible(3, 2)).mu == s.mu);
  const auto plan = single_target(3, 2, 1, 1);
  const auto once = apply_mask(s, plan);
  CHECK(once.row(1, 1).isZero(0.0));
  CHECK(once.row(1, 0) == s.row(1, 0));
  CHECK(apply_mask(once, plan).mu == once.mu);
  Graph<double> g;
  CHECK(apply_mask(g.constant(s.mu), plan).value() == once.mu);
  CHECK_THROWS_AS(apply_mask(s, MaskPlan::visible(2, 2)), ShapeError);
}

TEST_CASE("L2 auxiliary loss") {
  const Mat mu = random_matrix(6, 4, 6);
  auto p = aux_params(Mat::Identity(4, 4));
  Rng rng(7);
  const std::vector<MaskPlan> plans = {sample_mask_plan(MaskScheme::OnePerFrame, 3, 2, rng)};
  Graph<double> g;
  CHECK(aux_loss_l2(g, p, g.constant(mu), g.constant(mu), plans).value.value()(0, 0) == 0.0);

  Mat shifted = mu;
  shifted(3, 0) += 1.0;
  const auto one = aux_loss_l2(g, p, g.constant(shifted), g.constant(mu), {single_target(3, 2, 1, 1)});
  CHECK(one.value.value()(0, 0) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(one.targets == 1);

  const auto none = aux_loss_l2(g, p, g.constant(mu), g.constant(mu), {MaskPlan::visible(3, 2)});
  CHECK(none.empty);
  CHECK(none.value.value()(0, 0) == 0.0);
  CHECK_THROWS_AS(aux_loss_l2(g, p, g.constant(mu), g.constant(mu), {MaskPlan::visible(2, 2)}), ShapeError);
}

TEST_CASE("L2 loss gradient with respect to the map") {
  const Mat pred = random_matrix(12, 6, 8), truth = random_matrix(12, 4, 9);
  auto p = aux_params(random_matrix(6, 4, 10));
  Rng rng(11);
  const std::vector<MaskPlan> plans = {sample_mask_plan(MaskScheme::Random, 3, 2, rng, {0.5}),
                                       sample_mask_plan(MaskScheme::OnePerFrame, 3, 2, rng)};
  LossBuilder<double> loss = [&](Graph<double>& g, const ParamStore<double>& s) {
    return aux_loss_l2(g, s, g.constant(pred), g.constant(truth), plans).value;
  };
  CHECK(finite_diff_check(loss, p, "aux.weight") < 1e-6);
  CHECK(finite_diff_check(loss, p, "aux.bias") < 1e-6);
}

TEST_CASE("contrastive loss worked values") {
  AuxLossConfig same;
  same.kind = AuxLossKind::Contrastive;
  same.negatives = Negatives::SameFrame;
  auto p = aux_params(random_matrix(4, 4, 12));
  Graph<double> g;
  const Mat mu = random_matrix(3, 4, 13);
  // one slot per frame: the positive is the only candidate
  const auto single = aux_loss_contrastive(g, p, g.constant(mu), g.constant(mu), {single_target(3, 1, 2, 0)}, same);
  CHECK(single.value.value()(0, 0) == doctest::Approx(0.0).epsilon(1e-15));

  // a zero query scores every candidate equally
  auto zero = aux_params(Mat::Zero(4, 4));
  AuxLossConfig all = same;
  all.negatives = Negatives::AllFrames;
  const Mat many = random_matrix(8, 4, 14);
  Graph<double> gz;
  const auto uniform = aux_loss_contrastive(gz, zero, gz.constant(many), gz.constant(many), {single_target(4, 2, 3, 1)}, all);
  CHECK(uniform.value.value()(0, 0) == doctest::Approx(std::log(8.0)));
  const auto framed = aux_loss_contrastive(gz, zero, gz.constant(many), gz.constant(many), {single_target(4, 2, 3, 1)}, same);
  CHECK(framed.value.value()(0, 0) == doctest::Approx(std::log(2.0)));

  AuxLossConfig cosine = all;
  cosine.similarity = Similarity::Cosine;
  cosine.temperature = 0.3;
  const auto a = aux_loss_contrastive(g, p, g.constant(many), g.constant(many), {single_target(4, 2, 0, 0)}, cosine);
  const auto b =
      aux_loss_contrastive(g, p, g.constant(many), g.constant(many * 3.7), {single_target(4, 2, 0, 0)}, cosine);
  CHECK(a.value.value()(0, 0) == doctest::Approx(b.value.value()(0, 0)).epsilon(1e-12));
  CHECK(a.value.value()(0, 0) >= 0.0);
  CHECK(aux_loss_contrastive(g, p, g.constant(many), g.constant(many), {MaskPlan::visible(4, 2)}, all).empty);
}

TEST_CASE("contrastive loss is nonnegative and differentiable in every variant") {
  const Mat pred = random_matrix(10, 6, 15), truth = random_matrix(10, 4, 16);
  auto p = aux_params(random_matrix(6, 4, 17) * 0.5);
  Rng rng(18);
  const std::vector<MaskPlan> plans = {sample_mask_plan(MaskScheme::Random, 5, 2, rng, {0.5})};
  for (auto neg : {Negatives::AllFrames, Negatives::SameFrame}) {
    for (auto sim : {Similarity::Dot, Similarity::Cosine}) {
      AuxLossConfig cfg;
      cfg.kind = AuxLossKind::Contrastive;
      cfg.negatives = neg;
      cfg.similarity = sim;
      cfg.temperature = 0.5;
      LossBuilder<double> loss = [&](Graph<double>& g, const ParamStore<double>& s) {
        return aux_loss_contrastive(g, s, g.constant(pred), g.constant(truth), plans, cfg).value;
      };
      Graph<double> g;
      CHECK(loss(g, p).value()(0, 0) >= 0.0);
      INFO(to_string(neg) << " " << to_string(sim));
      CHECK(finite_diff_check(loss, p, "aux.weight") < 1e-4);
    }
  }
}

TEST_CASE("auxiliary losses ignore non-target predictions") {
  const Mat pred = random_matrix(8, 4, 19), truth = random_matrix(8, 4, 20);
  auto p = aux_params(random_matrix(4, 4, 21));
  const std::vector<MaskPlan> plans = {single_target(4, 2, 2, 1)};
  Mat moved_pred = pred, moved_truth = truth;
  moved_pred.row(0).array() += 5.0;
  moved_truth.row(0).array() += 5.0;
  AuxLossConfig cfg;
  cfg.kind = AuxLossKind::Contrastive;
  Graph<double> g;
  const double l2 = aux_loss_l2(g, p, g.constant(pred), g.constant(truth), plans).value.value()(0, 0);
  CHECK(aux_loss_l2(g, p, g.constant(moved_pred), g.constant(truth), plans).value.value()(0, 0) == l2);
  CHECK(aux_loss_l2(g, p, g.constant(pred), g.constant(moved_truth), plans).value.value()(0, 0) == l2);
  const double c = aux_loss_contrastive(g, p, g.constant(pred), g.constant(truth), plans, cfg).value.value()(0, 0);
  CHECK(aux_loss_contrastive(g, p, g.constant(moved_pred), g.constant(truth), plans, cfg).value.value()(0, 0) == c);
}

TEST_CASE("combine_losses") {
  Graph<double> g;
  auto task = g.constant(Mat::Constant(1, 1, 2.0));
  auto aux = g.constant(Mat::Constant(1, 1, 3.0));
  CHECK(combine_losses(task, aux, 0.0).id == task.id);
  CHECK(combine_losses(task, aux, 0.5).value()(0, 0) == 3.5);
  CHECK_THROWS_AS(combine_losses(task, aux, -1.0), ConfigError);
  KeyValueConfig kv;
  kv.set("loss", "contrastive");
  kv.set("temperature", "0");
  CHECK_THROWS_AS(AuxLossConfig::from(kv), ConfigError);
}
