#pragma once

#include <array>
#include <string>
#include <vector>

#include <json.hpp>

#include "objreason/harness/metrics.hpp"
#include "objreason/scenes/episode.hpp"

namespace objreason {

enum class CounterfactualBucket { Disconnected, Descriptive, Hard };
std::string to_string(CounterfactualBucket b);

/// Re-derives the bucket from the event log: a removed object that touches
/// nothing is disconnected; otherwise the question is descriptive when
/// every choice's counterfactual label equals whether that pair collided
/// in the factual video. Throws when the annotations are missing.
CounterfactualBucket classify_counterfactual(const Episode& ep);

struct TaxonomyReport {
  int questions = 0;
  std::array<int, 3> counts{};
  std::array<int, 3> scored{};  // questions with a prediction
  std::array<int, 3> correct{};
  int generator_disagreements = 0;  // against the generator's own flags

  double fraction(CounterfactualBucket b) const;
  double accuracy(CounterfactualBucket b) const;  // -1 without predictions
  nlohmann::json to_json() const;
};

/// Buckets every counterfactual question in `episodes`; `predictions`
/// (indexed by Prediction::episode) may be empty or cover a subset.
TaxonomyReport counterfactual_taxonomy(const std::vector<Episode>& episodes,
                                       const std::vector<Prediction>& predictions = {});

}  // namespace objreason
