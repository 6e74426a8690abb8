#include "objreason/harness/gradient_suite.hpp"

#include <functional>
#include <random>

#include "objreason/model.hpp"
#include "objreason/numerics.hpp"
#include "objreason/scenes/vocab.hpp"
#include "objreason/selfsup/aux_loss.hpp"
#include "objreason/selfsup/mask.hpp"

namespace objreason {

namespace {

using Mat = Matrix<double>;
using UnaryOp = std::function<Var<double>(Var<double>)>;

Mat random_matrix(Eigen::Index r, Eigen::Index c, std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> n(0.0, scale);
  Mat m(r, c);
  for (Eigen::Index k = 0; k < m.size(); ++k) m.data()[k] = n(rng);
  return m;
}

// Random linear functional of an op output, so every output entry matters.
Var<double> project(Graph<double>& g, Var<double> y, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  return sum_all(cmul(y, g.constant(random_matrix(y.rows(), y.cols(), rng))));
}

double check_unary(const UnaryOp& op, Mat x) {
  ParamStore<double> p;
  p.add("x", std::move(x));
  LossBuilder<double> loss = [&](Graph<double>& g, const ParamStore<double>& s) {
    return project(g, op(g.param(s, "x")), 99);
  };
  return finite_diff_check(loss, p, "x");
}

void op_cases(std::vector<GradientCase>& out) {
  std::mt19937_64 rng(11);
  const Mat a = random_matrix(3, 4, rng);
  const Mat b = random_matrix(3, 4, rng);
  const Mat w = random_matrix(4, 2, rng);
  const Mat row = random_matrix(1, 4, rng);
  // away from the ReLU kink
  Mat away = a;
  for (Eigen::Index k = 0; k < away.size(); ++k) {
    if (std::abs(away.data()[k]) < 0.1) away.data()[k] = 0.5;
  }
  auto with = [](const Mat& m, auto f) -> UnaryOp {
    return [m, f](Var<double> x) { return f(x, x.graph->constant(m)); };
  };
  IndexMatrix table(2, 3);
  table << 0, 2, -1, 1, 1, 0;
  const std::vector<std::tuple<const char*, UnaryOp, Mat>> cases = {
      {"matmul", with(w, [](auto x, auto c) { return matmul(x, c); }), a},
      {"matmul rhs", with(a, [](auto x, auto c) { return matmul(c, x); }), w},
      {"transpose", [](auto x) { return transpose(x); }, a},
      {"add", with(b, [](auto x, auto c) { return add(x, c); }), a},
      {"sub", with(b, [](auto x, auto c) { return sub(c, x); }), a},
      {"cmul", with(b, [](auto x, auto c) { return cmul(x, c); }), a},
      {"cmul self", [](auto x) { return cmul(x, x); }, a},
      {"scale", [](auto x) { return scale(x, 2.5); }, a},
      {"add_row", with(row, [](auto x, auto c) { return add_row(x, c); }), a},
      {"add_row bias", with(a, [](auto x, auto c) { return add_row(c, x); }), row},
      {"mul_row", with(row, [](auto x, auto c) { return mul_row(x, c); }), a},
      {"mul_row gain", with(a, [](auto x, auto c) { return mul_row(c, x); }), row},
      {"relu", [](auto x) { return relu(x); }, away},
      {"gelu", [](auto x) { return gelu(x); }, a},
      {"sigmoid", [](auto x) { return sigmoid(x); }, a},
      {"square", [](auto x) { return square(x); }, a},
      {"softmax_rows", [](auto x) { return softmax_rows(x); }, a},
      {"layer_norm_rows", [](auto x) { return layer_norm_rows(x); }, a},
      {"l2_normalize_rows", [](auto x) { return l2_normalize_rows(x); }, a},
      {"sum_rows", [](auto x) { return sum_rows(x); }, a},
      {"group_mean_rows", [](auto x) { return group_mean_rows(x, 3); }, random_matrix(6, 2, rng)},
      {"concat_rows", with(b, [](auto x, auto c) { return concat_rows<double>({x, c, x}); }), a},
      {"concat_cols", with(b, [](auto x, auto c) { return concat_cols<double>({c, x}); }), a},
      {"slice_rows", [](auto x) { return slice_rows(x, 1, 2); }, a},
      {"slice_cols", [](auto x) { return slice_cols(x, 1, 2); }, a},
      {"gather_rows", [](auto x) { return gather_rows(x, {2, -1, 0, 2}); }, a},
      {"reshape", [](auto x) { return reshape(x, 2, 6); }, a},
      {"mean_all", [](auto x) { return mean_all(x); }, a},
      {"patch_gather", [&table](auto x) { return patch_gather(x, table); }, random_matrix(3, 2, rng)},
  };
  for (const auto& [name, op, input] : cases) out.push_back({name, check_unary(op, input)});

  ParamStore<double> p;
  p.add("w", random_matrix(4, 3, rng));
  p.add("bias", random_matrix(1, 3, rng));
  const Mat x = random_matrix(5, 4, rng);
  LossBuilder<double> lin = [&](Graph<double>& g, const ParamStore<double>& s) {
    return project(g, linear(g.constant(x), g.param(s, "w"), g.param(s, "bias")), 7);
  };
  out.push_back({"linear", finite_diff_check_all(lin, p)});
}

void loss_cases(std::vector<GradientCase>& out) {
  std::mt19937_64 rng(4);
  ParamStore<double> p;
  p.add("z", random_matrix(4, 5, rng));
  LossBuilder<double> ce = [](Graph<double>& g, const ParamStore<double>& s) {
    return sum_all(cross_entropy_rows(g.param(s, "z"), {0, 3, 4, 1}));
  };
  out.push_back({"cross_entropy_rows", finite_diff_check(ce, p, "z")});

  BoolMatrix mask = BoolMatrix::Constant(4, 5, true);
  mask(0, 1) = mask(2, 0) = mask(3, 4) = false;
  LossBuilder<double> masked = [&](Graph<double>& g, const ParamStore<double>& s) {
    return sum_all(cross_entropy_rows(g.param(s, "z"), {0, 3, 4, 1}, &mask));
  };
  out.push_back({"cross_entropy_rows masked", finite_diff_check(masked, p, "z")});

  ParamStore<double> q;
  q.add("z", random_matrix(4, 1, rng));
  LossBuilder<double> bce = [](Graph<double>& g, const ParamStore<double>& s) {
    return sum_all(bce_with_logits(g.param(s, "z"), {1.0, 0.0, 0.0, 1.0}));
  };
  out.push_back({"bce_with_logits", finite_diff_check(bce, q, "z")});

  ParamStore<double> r;
  r.add("z", random_matrix(3, 16, rng));
  LossBuilder<double> l1 = [](Graph<double>& g, const ParamStore<double>& s) {
    return sum_all(expected_l1(softmax_rows(g.param(s, "z")), {0, 7, 15}, 4));
  };
  out.push_back({"expected_l1", finite_diff_check(l1, r, "z")});
}

void attention_cases(std::vector<GradientCase>& out) {
  std::mt19937_64 rng(8);
  const int D = 4, heads = 2, L = 8;
  ParamStore<double> p;
  for (const char* m : {"wq", "wk", "wv", "wr"}) p.add(m, random_matrix(D, D, rng, 0.7));
  p.add("u", random_matrix(1, D, rng, 0.3));
  p.add("w", random_matrix(1, D, rng, 0.3));
  p.add("x", random_matrix(L, D, rng));
  const Mat table = random_matrix(2 * L - 1, D, rng);
  AttentionBlock blk;
  blk.start = 0;
  blk.length = L;
  blk.offsets.resize(L, L);
  for (int i = 0; i < L; ++i) {
    for (int j = 0; j < L; ++j) blk.offsets(i, j) = (i / 2 - j / 2) + L - 1;
  }
  LossBuilder<double> loss = [&](Graph<double>& g, const ParamStore<double>& s) {
    auto x = g.param(s, "x");
    auto o = relative_attention(matmul(x, g.param(s, "wq")), matmul(x, g.param(s, "wk")), matmul(x, g.param(s, "wv")),
                                matmul(g.constant(table), g.param(s, "wr")), g.param(s, "u"), g.param(s, "w"), heads,
                                {blk});
    return project(g, o, 21);
  };
  out.push_back({"relative_attention", finite_diff_check_all(loss, p)});

  ParamStore<double> m;
  m.add("x", random_matrix(7, D, rng));
  m.add("r", random_matrix(5, D, rng));
  m.add("u", random_matrix(1, D, rng, 0.3));
  m.add("w", random_matrix(1, D, rng, 0.3));
  std::vector<AttentionBlock> blocks(2);
  blocks[0] = {0, 3, IndexMatrix::Constant(3, 3, 2), {}};
  blocks[1] = {3, 4, IndexMatrix::Zero(4, 4), BoolMatrix::Constant(4, 4, true)};
  for (int i = 0; i < 4; ++i) blocks[1].offsets(i, 3 - i) = 4;
  blocks[1].allowed(0, 3) = blocks[1].allowed(2, 1) = false;
  LossBuilder<double> two = [&](Graph<double>& g, const ParamStore<double>& s) {
    auto x = g.param(s, "x");
    auto o = relative_attention(x, cmul(x, x), x, g.param(s, "r"), g.param(s, "u"), g.param(s, "w"), 2, blocks);
    return project(g, o, 5);
  };
  out.push_back({"relative_attention masked blocks", finite_diff_check_all(two, m)});
}

ModelConfig tiny(AttentionMode mode) {
  ModelConfig c;
  c.layers = mode == AttentionMode::Hierarchical ? 2 : 1;
  c.attention_heads = 2;
  c.latent = 4;
  c.head_hidden = 6;
  c.slots = 2;
  c.mode = mode;
  c.max_position = 16;
  return c;
}

void model_cases(std::vector<GradientCase>& out) {
  std::mt19937_64 rng(7);
  const Mat slots = random_matrix(6, 4, rng);
  const std::vector<int> words = {Vocab::id("what"), Vocab::id("color"), Vocab::id("is")};
  for (auto mode : {AttentionMode::Global, AttentionMode::Hierarchical}) {
    const auto cfg = tiny(mode);
    auto p = init_model<double>(cfg, {HeadKind::Descriptive, HeadKind::Choice, HeadKind::Grid, HeadKind::Ternary}, 13);
    LossBuilder<double> loss = [&](Graph<double>& g, const ParamStore<double>& s) {
      auto a = assemble_inputs(g, s, g.constant(slots), 3, 2, words);
      auto b = assemble_inputs(g, s, g.constant(slots * 0.5), 3, 2, {Vocab::id("how")});
      auto r = model_forward(g, s, cfg, {a, b});
      auto desc = sum_all(cross_entropy_rows(head_logits(g, s, HeadKind::Descriptive, r.cls), {1, 4}));
      auto choice = sum_all(bce_with_logits(head_logits(g, s, HeadKind::Choice, r.cls), {1.0, 0.0}));
      auto grid = sum_all(expected_l1(head_distribution(g, s, HeadKind::Grid, r.cls), {3, 12}, 4));
      auto ternary = sum_all(cross_entropy_rows(head_logits(g, s, HeadKind::Ternary, r.cls), {2, 0}));
      return add(add(desc, choice), add(grid, ternary));
    };
    out.push_back({"tiny model " + to_string(mode), finite_diff_check_all(loss, p)});
  }

  // auxiliary losses through the transformer, on one masked sequence
  const auto cfg = tiny(AttentionMode::Global);
  Rng prng(3);
  const std::vector<MaskPlan> plans = {sample_mask_plan(MaskScheme::OnePerFrame, 3, 2, prng)};
  for (const char* spec : {"loss=l2", "loss=contrastive\nsimilarity=cosine\ntemperature=0.5",
                           "loss=contrastive\nnegatives=same-frame"}) {
    const auto aux = AuxLossConfig::from(KeyValueConfig::parse(spec));
    auto p = init_model<double>(cfg, {}, 17);
    LossBuilder<double> loss = [&](Graph<double>& g, const ParamStore<double>& s) {
      auto truth = g.constant(slots);
      auto seq = assemble_inputs(g, s, apply_mask(truth, plans.front()), 3, 2, {});
      return aux_loss(g, s, model_forward(g, s, cfg, {seq}).objects, truth, plans, aux).value;
    };
    std::string name = "aux " + std::string(spec);
    for (auto& ch : name) ch = ch == '\n' ? ' ' : ch;
    out.push_back({name, finite_diff_check_all(loss, p)});
  }
}

}  // namespace

std::vector<GradientCase> gradient_suite() {
  std::vector<GradientCase> out;
  op_cases(out);
  loss_cases(out);
  attention_cases(out);
  model_cases(out);
  return out;
}

}  // namespace objreason
