#include <doctest.h>

#include <random>

#include "objreason/harness/gradient_suite.hpp"
#include "objreason/numerics.hpp"

using namespace objreason;
using Mat = Matrix<double>;

namespace {

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

double check_unary(std::function<Var<double>(Var<double>)> op, Mat x) {
  ParamStore<double> p;
  p.add("x", std::move(x));
  LossBuilder<double> loss = [&](Graph<double>& g, const ParamStore<double>& s) {
    return project(g, op(g.param(s, "x")), 99);
  };
  return finite_diff_check(loss, p, "x");
}

}  // namespace

TEST_CASE("square evaluates and differentiates") {
  Graph<double> g;
  ParamStore<double> p;
  p.add("x", Mat::Constant(1, 1, 3.0));
  auto y = square(g.param(p, "x"));
  CHECK(y.value()(0, 0) == 9.0);
  auto grads = gradient(g, y, p);
  CHECK(grads.at("x")(0, 0) == 6.0);
}

TEST_CASE("softmax of equal logits is uniform") {
  Graph<double> g;
  auto s = softmax_rows(g.constant(Mat::Zero(1, 3)));
  for (int c = 0; c < 3; ++c) CHECK(s.value()(0, c) == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
}

TEST_CASE("matmul shape algebra and mismatch error") {
  Graph<double> g;
  auto a = g.constant(Mat::Ones(2, 3));
  auto b = g.constant(Mat::Ones(3, 4));
  auto c = matmul(a, b);
  CHECK(c.rows() == 2);
  CHECK(c.cols() == 4);
  try {
    matmul(a, a);
    FAIL("expected ShapeError");
  } catch (const ShapeError& e) {
    CHECK(std::string(e.op()) == "matmul");
    CHECK(e.node() >= 0);
  }
}

TEST_CASE("backward of a non-scalar target is an error") {
  Graph<double> g;
  ParamStore<double> p;
  p.add("x", Mat::Ones(2, 2));
  auto y = relu(g.param(p, "x"));
  CHECK_THROWS_AS(gradient(g, y, p), ShapeError);
}

TEST_CASE("stop_gradient contributes exactly zero") {
  Graph<double> g;
  ParamStore<double> p;
  p.add("x", Mat::Constant(1, 1, 2.0));
  auto x = g.param(p, "x");
  auto y = sum_all(square(stop_gradient(x)));
  auto grads = gradient(g, y, p);
  CHECK(grads.at("x")(0, 0) == 0.0);
  Graph<double> g2;
  auto x2 = g2.param(p, "x");
  auto z = add(square(x2), square(stop_gradient(x2)));
  CHECK(gradient(g2, z, p).at("x")(0, 0) == 4.0);
}

TEST_CASE("layer norm matches central differences below 1e-6") {
  std::mt19937_64 rng(5);
  const double err = check_unary([](Var<double> x) { return layer_norm_rows(x); }, random_matrix(1, 5, rng));
  CHECK(err < 1e-6);
}

TEST_CASE("a constant loss gives zero check error") {
  ParamStore<double> p;
  p.add("x", Mat::Ones(2, 2));
  LossBuilder<double> loss = [](Graph<double>& g, const ParamStore<double>&) {
    return sum_all(g.constant(Mat::Ones(1, 1)));
  };
  CHECK(finite_diff_check(loss, p, "x") == 0.0);
}

TEST_CASE("gradient suite: ops, losses, attention, heads, tiny models") {
  const auto suite = gradient_suite();
  CHECK(suite.size() > 40);
  for (const auto& c : suite) {
    INFO(c.name);
    CHECK(c.error < 1e-4);
  }
}

TEST_CASE("masked attention rows sum to one and honor the mask") {
  std::mt19937_64 rng(9);
  const int D = 4;
  ParamStore<double> p;
  p.add("x", random_matrix(7, D, rng));
  p.add("r", random_matrix(5, D, rng));
  p.add("u", random_matrix(1, D, rng, 0.3));
  p.add("w", random_matrix(1, D, rng, 0.3));
  std::vector<AttentionBlock> blocks(2);
  blocks[0] = {0, 3, IndexMatrix::Constant(3, 3, 2), {}};
  blocks[1] = {3, 4, IndexMatrix::Zero(4, 4), BoolMatrix::Constant(4, 4, true)};
  for (int i = 0; i < 4; ++i) blocks[1].offsets(i, 3 - i) = 4;
  blocks[1].allowed(0, 3) = blocks[1].allowed(2, 1) = false;
  AttentionWeights<double> weights;
  LossBuilder<double> loss = [&](Graph<double>& g, const ParamStore<double>& s) {
    auto x = g.param(s, "x");
    auto out = relative_attention(x, cmul(x, x), x, g.param(s, "r"), g.param(s, "u"), g.param(s, "w"), 2,
                                  blocks, &weights);
    return project(g, out, 5);
  };
  {
    Graph<double> g;
    loss(g, p);
  }
  REQUIRE(weights.size() == 2);
  for (const auto& blk : weights) {
    for (const auto& head : blk) {
      for (Eigen::Index r = 0; r < head.rows(); ++r) CHECK(std::abs(head.row(r).sum() - 1.0) < 1e-6);
    }
  }
  CHECK(weights[1][0](0, 3) == 0.0);
}

TEST_CASE("softmax rows are nonnegative and sum to one") {
  std::mt19937_64 rng(12);
  for (int trial = 0; trial < 50; ++trial) {
    Graph<double> g;
    auto s = softmax_rows(g.constant(random_matrix(4, 7, rng, 20.0)));
    CHECK(s.value().minCoeff() >= 0.0);
    for (Eigen::Index r = 0; r < 4; ++r) CHECK(std::abs(s.value().row(r).sum() - 1.0) < 1e-6);
  }
}

TEST_CASE("fully masked softmax row is a numeric error") {
  Graph<double> g;
  BoolMatrix mask = BoolMatrix::Constant(2, 3, true);
  mask.row(1).setConstant(false);
  CHECK_THROWS_AS(softmax_rows(g.constant(Mat::Zero(2, 3)), &mask), NumericError);
}

TEST_CASE("forward evaluation is bitwise deterministic") {
  std::mt19937_64 rng(13);
  const Mat x = random_matrix(6, 4, rng);
  auto run = [&] {
    Graph<double> g;
    return gelu(layer_norm_rows(matmul(g.constant(x), g.constant(x.transpose())))).value();
  };
  const Mat a = run(), b = run();
  CHECK(std::memcmp(a.data(), b.data(), sizeof(double) * static_cast<std::size_t>(a.size())) == 0);
}

TEST_CASE("parameter stores cast between precisions") {
  ParamStore<double> p;
  p.add("a", Mat::Constant(2, 2, 0.5));
  auto f = p.cast<float>();
  CHECK(f.get("a")(1, 1) == 0.5f);
  CHECK(f.parameter_count() == 4);
}
