#include "objreason/optim/lamb.hpp"

namespace objreason {

OptimizerConfig OptimizerConfig::from(const KeyValueConfig& cfg) {
  OptimizerConfig c;
  const auto kind = cfg.get_string("kind", "lamb");
  if (kind == "lamb") c.kind = OptimizerKind::Lamb;
  else if (kind == "adam") c.kind = OptimizerKind::Adam;
  else throw ConfigError("optim.kind must be lamb or adam, got '" + kind + "'");
  c.beta1 = cfg.get_double("beta1", c.beta1);
  c.beta2 = cfg.get_double("beta2", c.beta2);
  c.eps = cfg.get_double("eps", c.eps);
  c.weight_decay = cfg.get_double("weight_decay", c.weight_decay);
  if (c.beta1 < 0 || c.beta1 >= 1 || c.beta2 < 0 || c.beta2 >= 1) throw ConfigError("optim: betas must be in [0,1)");
  if (!(c.eps > 0) || c.weight_decay < 0) throw ConfigError("optim: eps must be positive, weight_decay >= 0");
  return c;
}

void export_state(const OptState<float>& state, Checkpoint& ckpt) {
  ckpt.step = state.step;
  for (const auto& [name, m] : state.m) ckpt.tensors["opt.m." + name] = m;
  for (const auto& [name, v] : state.v) ckpt.tensors["opt.v." + name] = v;
}

OptState<float> import_state(const Checkpoint& ckpt) {
  OptState<float> s;
  s.step = ckpt.step;
  for (const auto& [name, t] : ckpt.tensors) {
    if (name.rfind("opt.m.", 0) == 0) s.m[name.substr(6)] = t;
    else if (name.rfind("opt.v.", 0) == 0) s.v[name.substr(6)] = t;
  }
  return s;
}

}  // namespace objreason
