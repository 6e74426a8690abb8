#pragma once

#include "objreason/util/kv_config.hpp"

namespace objreason {

/// Linear warmup from 0 to max_lr, then linear decay to final_lr at
/// decay_steps, constant afterwards.
struct Schedule {
  double max_lr = 0.002;
  long warmup_steps = 4000;
  double final_lr = 2e-7;
  long decay_steps = 200000;

  double lr_at(long step) const;
  void validate() const;
  static Schedule from(const KeyValueConfig& cfg);  // keys under "lr."
};

}  // namespace objreason
