#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <string>

#include "objreason/model/checkpoint.hpp"
#include "objreason/numerics/error.hpp"
#include "objreason/numerics/graph.hpp"
#include "objreason/util/kv_config.hpp"

namespace objreason {

enum class OptimizerKind { Lamb, Adam };

struct OptimizerConfig {
  OptimizerKind kind = OptimizerKind::Lamb;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-6;
  double weight_decay = 0.01;
  double norm_min = 0.01;  // parameter-norm clamp in the trust ratio
  double norm_max = 10.0;

  static OptimizerConfig from(const KeyValueConfig& cfg);  // keys under "optim."
};

/// Biases and layer-norm gains are not decayed.
inline bool decays(const std::string& name) {
  return name.find("bias") == std::string::npos && name.find("gain") == std::string::npos;
}

template <typename Scalar>
struct OptState {
  std::map<std::string, Matrix<Scalar>> m;
  std::map<std::string, Matrix<Scalar>> v;
  long step = 0;
};

/// One LAMB (or plain adaptive-moment) update of every parameter that has a
/// gradient. Throws NumericError before touching anything when a gradient
/// is not finite.
template <typename Scalar>
void lamb_step(ParamStore<Scalar>& params, const std::map<std::string, Matrix<Scalar>>& grads, OptState<Scalar>& state,
               const OptimizerConfig& cfg, double lr) {
  for (const auto& [name, g] : grads) {
    if (!g.allFinite()) throw NumericError("optimizer: non-finite gradient for '" + name + "'");
    const auto& w = params.get(name);
    if (w.rows() != g.rows() || w.cols() != g.cols()) {
      throw ShapeError("lamb_step", -1, "gradient shape differs for '" + name + "'");
    }
  }
  ++state.step;
  const double b1 = cfg.beta1, b2 = cfg.beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(state.step));
  for (const auto& [name, g] : grads) {
    auto& w = params.get_mutable(name);
    auto& m = state.m[name];
    auto& v = state.v[name];
    if (m.size() == 0) {
      m = Matrix<Scalar>::Zero(w.rows(), w.cols());
      v = Matrix<Scalar>::Zero(w.rows(), w.cols());
    }
    m = static_cast<Scalar>(b1) * m + static_cast<Scalar>(1.0 - b1) * g;
    v = static_cast<Scalar>(b2) * v + static_cast<Scalar>(1.0 - b2) * g.cwiseProduct(g);
    const double wd = decays(name) ? cfg.weight_decay : 0.0;
    Eigen::Array<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> u =
        (m.template cast<double>().array() / c1) / ((v.template cast<double>().array() / c2).sqrt() + cfg.eps) +
        wd * w.template cast<double>().array();
    double ratio = 1.0;
    if (cfg.kind == OptimizerKind::Lamb) {
      const double unorm = std::sqrt(u.square().sum());
      const double wnorm = std::clamp(static_cast<double>(w.template cast<double>().norm()), cfg.norm_min, cfg.norm_max);
      if (unorm > 0.0) ratio = wnorm / (unorm + 1e-12);
    }
    w = (w.template cast<double>().array() - lr * ratio * u).matrix().template cast<Scalar>();
  }
}

/// Moments are stored as "opt.m.<name>" / "opt.v.<name>"; the step travels
/// in the checkpoint header.
void export_state(const OptState<float>& state, Checkpoint& ckpt);
OptState<float> import_state(const Checkpoint& ckpt);

}  // namespace objreason
