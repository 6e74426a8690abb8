#include "objreason/optim/schedule.hpp"

#include "objreason/numerics/error.hpp"

namespace objreason {

double Schedule::lr_at(long step) const {
  if (step < 0) throw ConfigError("lr_at: negative step");
  if (step < warmup_steps) return max_lr * static_cast<double>(step) / static_cast<double>(warmup_steps);
  if (step >= decay_steps) return final_lr;
  const double frac = static_cast<double>(step - warmup_steps) / static_cast<double>(decay_steps - warmup_steps);
  return max_lr + (final_lr - max_lr) * frac;
}

void Schedule::validate() const {
  if (warmup_steps < 0 || decay_steps < warmup_steps) throw ConfigError("lr: need 0 <= warmup_steps <= decay_steps");
  if (!(max_lr > 0.0) || final_lr < 0.0 || final_lr > max_lr) throw ConfigError("lr: need 0 <= final <= max, max > 0");
}

Schedule Schedule::from(const KeyValueConfig& cfg) {
  Schedule s;
  s.max_lr = cfg.get_double("max", s.max_lr);
  s.final_lr = cfg.get_double("final", s.final_lr);
  s.warmup_steps = cfg.get_long("warmup", s.warmup_steps);
  s.decay_steps = cfg.get_long("decay", s.decay_steps);
  s.validate();
  return s;
}

}  // namespace objreason
