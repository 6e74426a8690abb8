#pragma once

#include <vector>

#include <json.hpp>

#include "objreason/harness/experiment.hpp"

namespace objreason {

struct AlignmentReport {
  int episodes = 0;
  double max_delta = 0.0;       // max |cls(shuffled) - cls(identity)|
  double mean_delta = 0.0;      // per episode max, averaged
  double identity_delta = 0.0;  // identity encoding run twice
  int label_disagreements = 0;

  nlohmann::json to_json() const;
};

/// Compares the model on identity-ordered oracle slots against random
/// per-frame slot permutations of the same episodes. Needs the oracle
/// encoder.
AlignmentReport alignment_report(const Experiment& ex, const ParamStore<float>& params,
                                 const std::vector<int>& episodes, std::uint64_t seed);

struct InfillRow {
  int offset = 0;  // target frame minus first target frame
  int targets = 0;
  double mean_l2 = 0.0;  // squared distance, as in the training loss
};

struct InfillReport {
  bool probe = false;  // readout fitted post hoc instead of the trained one
  std::vector<InfillRow> rows;

  nlohmann::json to_json() const;
};

/// Per-offset mean squared distance between predicted and true target
/// rows. `predicted` and `truth` stack the episodes' frame-major rows.
std::vector<InfillRow> tabulate_infill(const Matrix<double>& predicted, const Matrix<double>& truth,
                                       const std::vector<MaskPlan>& plans);

/// Hides the final frames (scheme d) of each episode and scores the
/// reconstruction of the hidden slots. Without probe episodes the trained
/// auxiliary readout is used; otherwise a linear readout is fitted by
/// least squares on the probe episodes' target rows first.
InfillReport infill_report(const Experiment& ex, const ParamStore<float>& params, const std::vector<int>& episodes,
                           const std::vector<int>& probe_episodes = {}, std::uint64_t seed = 0);

}  // namespace objreason
