#pragma once

#include <string>
#include <vector>

namespace objreason {

struct GradientCase {
  std::string name;
  double error = 0.0;  // worst relative error against central differences
};

/// Finite-difference checks in 64-bit over every differentiable op, the
/// attention op, the losses and heads, the auxiliary losses, and the tiny
/// end-to-end model (one layer, two heads, latent 4, 3 frames, 2 slots)
/// in global and hierarchical form.
std::vector<GradientCase> gradient_suite();

}  // namespace objreason
