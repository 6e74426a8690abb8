#include <doctest.h>

#include <filesystem>

#include "objreason/encoder/slots.hpp"
#include "objreason/model.hpp"
#include "objreason/scenes/collision.hpp"
#include "objreason/scenes/vocab.hpp"

using namespace objreason;
using Mat = Matrix<double>;

namespace {

ModelConfig tiny(AttentionMode mode = AttentionMode::Global) {
  ModelConfig c;
  c.layers = mode == AttentionMode::Hierarchical ? 2 : 1;
  c.attention_heads = 2;
  c.latent = 4;
  c.head_hidden = 6;
  c.slots = 2;
  c.mode = mode;
  c.mlp_width = 8;
  c.mlp_length = 3 * 2 + 3 + 1;
  c.max_position = 16;
  return c;
}

Mat random_slots(int rows, int d, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, 1.0);
  Mat m(rows, d);
  for (Eigen::Index k = 0; k < m.size(); ++k) m.data()[k] = n(rng);
  return m;
}

const std::vector<int> kWords = {Vocab::id("what"), Vocab::id("color"), Vocab::id("is")};

}  // namespace

TEST_CASE("input assembly layout") {
  ModelConfig cfg;
  auto p = init_model<double>(cfg, {HeadKind::Descriptive}, 1);
  Graph<double> g;
  auto seq = assemble_inputs(g, p, g.constant(Mat::Zero(6, 16)), 2, 3, {1, 2, 3, 4});
  CHECK(seq.length() == 2 * 3 + 4 + 1);
  CHECK(seq.vectors.cols() == 18);
  int cls = 0;
  for (int i = 0; i < seq.length(); ++i) {
    const auto& e = seq.elements[static_cast<std::size_t>(i)];
    const double a = seq.vectors.value()(i, 16), b = seq.vectors.value()(i, 17);
    if (e.modality == Modality::Object) CHECK((a == 1.0 && b == 0.0));
    if (e.modality == Modality::Word) CHECK((a == 0.0 && b == 1.0));
    if (e.modality == Modality::Cls) {
      CHECK((a == 0.0 && b == 0.0));
      ++cls;
    }
  }
  CHECK(cls == 1);
  CHECK(seq.elements[4].position == 1);
  CHECK(seq.elements[6].position == 2);
  CHECK(seq.elements[10].position == 6);
  auto no_words = assemble_inputs(g, p, g.constant(Mat::Zero(6, 16)), 2, 3, {});
  CHECK(no_words.length() == 7);
  CHECK_THROWS(assemble_inputs(g, p, g.constant(Mat::Zero(6, 16)), 2, 3, {999}));
  CHECK_THROWS_AS(assemble_inputs(g, p, g.constant(Mat::Zero(5, 16)), 2, 3, {}), ShapeError);
}

TEST_CASE("projection width and zero input") {
  ModelConfig cfg;
  cfg.attention_heads = 10;
  CHECK(cfg.width() == 160);
  auto p = init_model<double>(cfg, {}, 2);
  CHECK(p.get("proj.weight").rows() == 18);
  CHECK(p.get("proj.weight").cols() == 160);
  Graph<double> g;
  auto y = project_inputs(g, p, g.constant(Mat::Zero(1, 18)));
  CHECK(y.value() == p.get("proj.bias").cwiseMax(0.0));

  auto small = tiny();
  auto q = init_model<double>(small, {}, 3);
  const Mat x = random_slots(5, 6, 4);
  const Mat probe = random_slots(5, 8, 5);
  LossBuilder<double> loss = [&](Graph<double>& g, const ParamStore<double>& s) {
    return sum_all(cmul(project_inputs(g, s, g.constant(x)), g.constant(probe)));
  };
  CHECK(finite_diff_check(loss, q, "proj.weight") < 1e-4);
}

TEST_CASE("relative sinusoid table") {
  const Mat t = relative_table(8, 6);
  const int zero = 7;
  for (int k = 0; k < 6; ++k) CHECK(t(zero, k) == (k % 2 == 0 ? 0.0 : 1.0));
  for (int o = 1; o < 8; ++o) {
    for (int k = 0; k < 6; ++k) {
      if (k % 2 == 0) CHECK(t(zero + o, k) == doctest::Approx(-t(zero - o, k)));
      else CHECK(t(zero + o, k) == doctest::Approx(t(zero - o, k)));
    }
  }
  const auto layout = sequence_layout(2, 3, 1);
  const auto off = relative_offsets(layout, 8);
  CHECK(off(0, 2) == zero);
  CHECK(off(3, 0) == zero + 1);
  CHECK_THROWS_AS(relative_offsets(sequence_layout(10, 1, 0), 8), ConfigError);
}

TEST_CASE("global attention rows sum to one and zero layers is identity") {
  auto cfg = tiny();
  cfg.layers = 2;
  auto p = init_model<double>(cfg, {HeadKind::Descriptive}, 6);
  Graph<double> g;
  auto seq = assemble_inputs(g, p, g.constant(random_slots(6, 4, 1)), 3, 2, kWords);
  ForwardOptions opts;
  opts.record_trace = true;
  auto r = global_forward(g, p, cfg, {seq, seq}, opts);
  REQUIRE(r.traces.size() == 2);
  CHECK(r.traces[0].layers() == 2);
  CHECK(r.traces[0].heads() == 2);
  for (const auto& layer : r.traces[1].weights) {
    for (const auto& h : layer) {
      CHECK(h.rows() == seq.length());
      for (Eigen::Index i = 0; i < h.rows(); ++i) CHECK(std::abs(h.row(i).sum() - 1.0) < 1e-6);
    }
  }
  CHECK(r.cls.rows() == 2);
  CHECK(r.objects.rows() == 12);

  cfg.layers = 0;
  auto p0 = init_model<double>(cfg, {}, 6);
  Graph<double> g0;
  auto s0 = assemble_inputs(g0, p0, g0.constant(random_slots(6, 4, 1)), 3, 2, kWords);
  auto r0 = global_forward(g0, p0, cfg, {s0});
  auto projected = project_inputs(g0, p0, s0.vectors);
  CHECK(r0.cls.value() == projected.value().row(s0.cls_index()));
}

TEST_CASE("within-frame slot permutation leaves CLS unchanged and permutes slot outputs") {
  CollisionConfig cc;
  cc.render = false;
  ModelConfig cfg;
  cfg.layers = 2;
  cfg.slots = 4;
  auto p = init_model<float>(cfg, {HeadKind::Descriptive}, 7);
  for (std::uint64_t s = 0; s < 10; ++s) {
    const auto ep = gen_collision_episode(cc, s);
    const auto plain = oracle_encode(ep, 16, false, 0).cast<float>();
    const auto shuffled = oracle_encode(ep, 16, true, s + 100).cast<float>();
    Graph<float> g;
    auto a = global_forward(g, p, cfg, {assemble_inputs(g, p, g.constant(plain.mu), plain.frames, plain.slots, ep.question)});
    auto b = global_forward(g, p, cfg, {assemble_inputs(g, p, g.constant(shuffled.mu), plain.frames, plain.slots, ep.question)});
    CHECK((a.cls.value() - b.cls.value()).cwiseAbs().maxCoeff() < 1e-5f);
    for (int t = 0; t < plain.frames; ++t) {
      for (int j = 0; j < plain.slots; ++j) {
        const int src = shuffled.permutations[static_cast<std::size_t>(t)][static_cast<std::size_t>(j)];
        const auto diff = (b.objects.value().row(t * plain.slots + j) - a.objects.value().row(t * plain.slots + src))
                              .cwiseAbs()
                              .maxCoeff();
        CHECK(diff < 1e-5f);
      }
    }
  }
}

TEST_CASE("words do not affect objects when objects attend only to objects") {
  auto cfg = tiny();
  cfg.layers = 2;
  auto p = init_model<double>(cfg, {}, 8);
  const Mat slots = random_slots(6, 4, 2);
  ForwardOptions opts;
  opts.objects_only = true;
  Graph<double> g;
  auto with = global_forward(g, p, cfg, {assemble_inputs(g, p, g.constant(slots), 3, 2, kWords)}, opts);
  auto without = global_forward(g, p, cfg, {assemble_inputs(g, p, g.constant(slots), 3, 2, {})}, opts);
  CHECK((with.objects.value() - without.objects.value()).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("hierarchical attention structure and parameter count") {
  auto cfg = tiny(AttentionMode::Hierarchical);
  auto p = init_model<double>(cfg, {}, 9);
  Graph<double> g;
  ForwardOptions opts;
  opts.record_trace = true;
  auto seq = assemble_inputs(g, p, g.constant(random_slots(6, 4, 3)), 3, 2, kWords);
  auto r = hierarchical_forward(g, p, cfg, {seq}, opts);
  REQUIRE(r.traces.size() == 1);
  CHECK(r.traces[0].weights[0][0].rows() == 3 + 3 + 1);
  const auto& s1 = r.stage1_traces[0].weights[0][0];
  CHECK(s1.rows() == 6);
  for (int i = 0; i < 6; ++i) {
    for (int j = 0; j < 6; ++j) {
      if (i / 2 != j / 2) CHECK(s1(i, j) == 0.0);
    }
    CHECK(std::abs(s1.row(i).sum() - 1.0) < 1e-6);
  }

  ModelConfig global;
  global.layers = 4;
  global.latent = 16;
  global.attention_heads = 2;
  global.slots = 4;
  ModelConfig hier = global;
  hier.mode = AttentionMode::Hierarchical;
  const auto pg = init_model<float>(global, {HeadKind::Descriptive, HeadKind::Choice}, 1).parameter_count();
  const auto ph = init_model<float>(hier, {HeadKind::Descriptive, HeadKind::Choice}, 1).parameter_count();
  CHECK(std::abs(double(ph - pg)) / double(pg) < 0.10);
}

TEST_CASE("MLP baseline") {
  auto cfg = tiny(AttentionMode::Mlp);
  auto p = init_model<double>(cfg, {HeadKind::Descriptive}, 10);
  const Mat slots = random_slots(6, 4, 4);
  auto run = [&] {
    Graph<double> g;
    auto seq = assemble_inputs(g, p, g.constant(slots), 3, 2, kWords);
    return mlp_baseline_forward(g, p, cfg, {seq}).value();
  };
  const Mat a = run();
  CHECK(a.cols() == cfg.width());
  CHECK(a == run());
  Graph<double> g;
  auto short_seq = assemble_inputs(g, p, g.constant(slots), 3, 2, {});
  CHECK_THROWS_AS(mlp_baseline_forward(g, p, cfg, {short_seq}), ConfigError);
  CHECK(model_forward(g, p, cfg, {short_seq}).cls.cols() == cfg.width());

  LossBuilder<double> loss = [&](Graph<double>& g, const ParamStore<double>& s) {
    auto seq = assemble_inputs(g, s, g.constant(slots), 3, 2, kWords);
    auto logits = head_logits(g, s, HeadKind::Descriptive, mlp_baseline_forward(g, s, cfg, {seq}));
    return sum_all(cross_entropy_rows(logits, {3}));
  };
  CHECK(finite_diff_check_all(loss, p) < 1e-4);
}

TEST_CASE("heads") {
  ModelConfig cfg;
  CHECK(cfg.hidden_for(HeadKind::Descriptive) == 128);
  CHECK(cfg.hidden_for(HeadKind::Grid) == 144);
  CHECK(cfg.hidden_for(HeadKind::Ternary) == 36);
  cfg.grid = 6;
  auto p = init_model<double>(cfg, {HeadKind::Descriptive, HeadKind::Choice, HeadKind::Grid, HeadKind::Ternary}, 11);
  CHECK(p.get("head.ternary.hidden.weight").cols() == 36);
  Graph<double> g;
  auto cls = g.constant(random_slots(2, cfg.width(), 5));
  auto desc = head_distribution(g, p, HeadKind::Descriptive, cls).value();
  auto tern = head_distribution(g, p, HeadKind::Ternary, cls).value();
  auto grid = head_distribution(g, p, HeadKind::Grid, cls).value();
  CHECK(grid.cols() == 36);
  for (int r = 0; r < 2; ++r) {
    CHECK(std::abs(desc.row(r).sum() - 1.0) < 1e-12);
    CHECK(std::abs(tern.row(r).sum() - 1.0) < 1e-12);
  }
  Mat logits(1, 3);
  logits << 0.3, -1.2, 2.0;
  CHECK(argmax_rows<double>(logits) == argmax_rows<double>((logits.array() + 7.5).matrix()));

  Mat sure = Mat::Zero(1, 5);
  sure(0, 2) = 1000.0;
  CHECK(sum_all(cross_entropy_rows(g.constant(sure), {2})).value()(0, 0) == 0.0);
  CHECK(sigmoid(g.constant(Mat::Zero(1, 1))).value()(0, 0) == 0.5);

  auto uniform = g.constant(Mat::Constant(1, 16, 1.0 / 16));
  double brute = 0;
  for (int c = 0; c < 16; ++c) brute += (std::abs(c / 4 - 0) + std::abs(c % 4 - 0)) / 16.0;
  CHECK(expected_l1(uniform, {0}, 4).value()(0, 0) == doctest::Approx(brute));
  CHECK(brute == doctest::Approx(3.0));
  Mat onehot = Mat::Zero(1, 16);
  onehot(0, 9) = 1.0;
  CHECK(expected_l1(g.constant(onehot), {9}, 4).value()(0, 0) == 0.0);
}

TEST_CASE("checkpoint round trip is exact") {
  Checkpoint c;
  c.config_text = "layers=2\n";
  c.step = 42;
  c.tensors["a"] = Matrix<float>::Random(3, 5);
  c.tensors["b.bias"] = Matrix<float>::Constant(1, 4, -0.25f);
  const auto path = (std::filesystem::temp_directory_path() / "objreason_ckpt_test.bin").string();
  save_checkpoint(path, c);
  const auto back = load_checkpoint(path);
  CHECK(back.config_text == c.config_text);
  CHECK(back.step == 42);
  CHECK(back.tensors.at("a") == c.tensors.at("a"));
  CHECK(back.tensors.at("b.bias") == c.tensors.at("b.bias"));
  std::filesystem::remove(path);
  CHECK_THROWS(load_checkpoint(path));
}
