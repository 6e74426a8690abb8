#pragma once

#include <functional>
#include <string>
#include <vector>

#include <json.hpp>

#include "objreason/harness/experiment.hpp"

namespace objreason {

struct AblationVariant {
  std::string group;  // "reference", "architecture" or "selfsup"
  std::string name;
  TrainConfig cfg;
};

/// The reference run, four architecture ablations (MLP baseline, hyperpixel
/// encoder, hierarchical attention, no auxiliary loss) and the 6 x 2 grid of
/// masking schemes and auxiliary losses at `selfsup_fraction` labeled data.
/// Every variant keeps the base seed so runs are paired.
std::vector<AblationVariant> ablation_variants(const TrainConfig& base, int frames, double selfsup_fraction = 0.5);

struct AblationRow {
  std::string group;
  std::string name;
  MetricsRecord metrics;
};

struct AblationTable {
  std::vector<AblationRow> rows;

  nlohmann::json to_json() const;
  std::string to_text() const;  // aligned plain-text table
};

AblationTable run_ablation_suite(const TrainConfig& base, double selfsup_fraction = 0.5,
                                 const std::function<void(const AblationRow&)>& on_row = {});

}  // namespace objreason
