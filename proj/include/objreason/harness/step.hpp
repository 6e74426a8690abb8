#pragma once

#include <map>
#include <string>

#include "objreason/harness/experiment.hpp"

namespace objreason {

struct StepLoss {
  Var<float> task;
  Var<float> aux;  // invalid when the auxiliary weight is zero
  Var<float> total;
  int aux_targets = 0;
};

/// Builds the combined loss of optimizer step `step`: an independent
/// supervised batch from the labeled pool (collision: descriptive and
/// multiple-choice sub-batches, one sequence per choice) and, when the
/// auxiliary weight is positive, a video-only masked batch drawn from every
/// training episode. The masked pass detaches the CLS vector, encoder
/// outputs and targets, so its gradient reaches only the transformer, the
/// projection and the auxiliary map.
StepLoss build_step_loss(Graph<float>& g, const Experiment& ex, const ParamStore<float>& params, long step);

struct StepGradients {
  double task = 0.0;
  double aux = 0.0;
  double total = 0.0;
  std::map<std::string, Matrix<float>> grads;  // parameters the loss reached
};

StepGradients compute_step(const Experiment& ex, const ParamStore<float>& params, long step);

}  // namespace objreason
