#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "objreason/optim/lamb.hpp"
#include "objreason/optim/schedule.hpp"
#include "objreason/util/random.hpp"

using namespace objreason;
using Mat = Matrix<double>;

namespace {

ParamStore<double> scalar_store(const std::string& name, double w) {
  ParamStore<double> p;
  p.add(name, Mat::Constant(1, 1, w));
  return p;
}

std::map<std::string, Mat> scalar_grad(const std::string& name, double g) { return {{name, Mat::Constant(1, 1, g)}}; }

}  // namespace

TEST_CASE("schedule points") {
  Schedule s;
  CHECK(s.lr_at(0) == 0.0);
  CHECK(s.lr_at(2000) == 0.001);
  CHECK(s.lr_at(4000) == 0.002);
  CHECK(s.lr_at(200000) == 2e-7);
  CHECK(s.lr_at(500000) == 2e-7);
  CHECK(s.lr_at(102000) == doctest::Approx(0.002 + (2e-7 - 0.002) * 0.5));
  for (long k = 1; k < 200100; k += 997) {
    CHECK(std::abs(s.lr_at(k) - s.lr_at(k - 1)) <= 0.002 / 4000 + 1e-15);
  }
  s.warmup_steps = 10;
  s.decay_steps = 5;
  CHECK_THROWS_AS(s.validate(), ConfigError);
  CHECK_THROWS_AS(Schedule{}.lr_at(-1), ConfigError);
}

TEST_CASE("single scalar LAMB steps match hand arithmetic") {
  OptimizerConfig cfg;
  cfg.weight_decay = 0.0;
  {
    // m_hat = 1, v_hat = 1, u = 1/(1+1e-6), trust ratio 1/u: w = 1 - 0.1
    auto p = scalar_store("w", 1.0);
    OptState<double> s;
    lamb_step(p, scalar_grad("w", 1.0), s, cfg, 0.1);
    CHECK(std::abs(p.get("w")(0, 0) - 0.9) < 1e-10);
    CHECK(s.step == 1);
  }
  {
    // m_hat = -0.5, v_hat = 0.25, u = -0.5/0.500001 + 0.01*2, ratio 2/|u|: w = 2 + 0.1*2
    cfg.weight_decay = 0.01;
    auto p = scalar_store("w", 2.0);
    OptState<double> s;
    lamb_step(p, scalar_grad("w", -0.5), s, cfg, 0.1);
    CHECK(std::abs(p.get("w")(0, 0) - 2.2) < 1e-10);
  }
  {
    // bias: no decay; |w| = 0 clamps to 0.01, so the step is lr * 0.01 * sign
    auto p = scalar_store("layer.bias", 0.0);
    OptState<double> s;
    lamb_step(p, scalar_grad("layer.bias", 3.0), s, cfg, 0.5);
    CHECK(std::abs(p.get("layer.bias")(0, 0) + 0.005) < 1e-10);
  }
}

TEST_CASE("zero gradient leaves parameters unchanged") {
  ParamStore<double> p;
  p.add("a.weight", Mat::Constant(3, 2, 0.7));
  OptimizerConfig cfg;
  cfg.weight_decay = 0.0;
  OptState<double> s;
  lamb_step(p, {{"a.weight", Mat::Zero(3, 2)}}, s, cfg, 0.1);
  CHECK(p.get("a.weight") == Mat::Constant(3, 2, 0.7));
}

TEST_CASE("adaptive fallback matches a direct implementation on random scalars") {
  OptimizerConfig cfg;
  cfg.kind = OptimizerKind::Adam;
  cfg.weight_decay = 0.0;
  Rng rng(5);
  auto p = scalar_store("w", 0.3);
  OptState<double> s;
  double w = 0.3, m = 0, v = 0;
  for (int t = 1; t <= 50; ++t) {
    const double g = uniform(rng, -2.0, 2.0);
    lamb_step(p, scalar_grad("w", g), s, cfg, 0.01);
    m = 0.9 * m + 0.1 * g;
    v = 0.999 * v + 0.001 * g * g;
    const double mh = m / (1 - std::pow(0.9, t)), vh = v / (1 - std::pow(0.999, t));
    w -= 0.01 * mh / (std::sqrt(vh) + 1e-6);
  }
  CHECK(std::abs(p.get("w")(0, 0) - w) < 1e-12);
}

TEST_CASE("non-finite gradients abort before any update") {
  ParamStore<double> p;
  p.add("a", Mat::Constant(1, 2, 1.0));
  p.add("b", Mat::Constant(1, 2, 1.0));
  OptState<double> s;
  Mat bad = Mat::Constant(1, 2, 1.0);
  bad(0, 1) = std::nan("");
  CHECK_THROWS_AS(lamb_step(p, {{"a", Mat::Constant(1, 2, 1.0)}, {"b", bad}}, s, OptimizerConfig{}, 0.1), NumericError);
  CHECK(p.get("a") == Mat::Constant(1, 2, 1.0));
  CHECK(s.step == 0);
}

TEST_CASE("optimizer state round-trips through a checkpoint") {
  ParamStore<float> p;
  p.add("x.weight", Matrix<float>::Random(4, 3));
  OptState<float> s;
  lamb_step(p, {{"x.weight", Matrix<float>::Random(4, 3)}}, s, OptimizerConfig{}, 0.01);
  lamb_step(p, {{"x.weight", Matrix<float>::Random(4, 3)}}, s, OptimizerConfig{}, 0.01);
  Checkpoint c;
  export_state(s, c);
  const auto path = (std::filesystem::temp_directory_path() / "objreason_opt_test.bin").string();
  save_checkpoint(path, c);
  const auto back = import_state(load_checkpoint(path));
  std::filesystem::remove(path);
  CHECK(back.step == 2);
  CHECK(back.m.at("x.weight") == s.m.at("x.weight"));
  CHECK(back.v.at("x.weight") == s.v.at("x.weight"));

  auto p2 = p;
  auto s2 = back;
  const Matrix<float> g = Matrix<float>::Random(4, 3);
  lamb_step(p, {{"x.weight", g}}, s, OptimizerConfig{}, 0.01);
  lamb_step(p2, {{"x.weight", g}}, s2, OptimizerConfig{}, 0.01);
  CHECK(p.get("x.weight") == p2.get("x.weight"));
}
