#include "objreason/analysis/taxonomy.hpp"

#include <algorithm>
#include <unordered_map>

#include "objreason/numerics/error.hpp"
#include "objreason/scenes/collision.hpp"

namespace objreason {

std::string to_string(CounterfactualBucket b) {
  switch (b) {
    case CounterfactualBucket::Disconnected: return "disconnected";
    case CounterfactualBucket::Descriptive: return "descriptive";
    case CounterfactualBucket::Hard: return "hard";
  }
  return "?";
}

CounterfactualBucket classify_counterfactual(const Episode& ep) {
  const auto& ann = ep.annotations;
  if (ep.task != TaskKind::Collision || ep.category != QuestionCategory::Counterfactual) {
    throw Error("taxonomy: episode is not a counterfactual collision question");
  }
  if (ann.removed_object < 0 || ann.choice_pairs.size() != ep.choices.size() ||
      ep.choice_answers.size() != ep.choices.size()) {
    throw Error("taxonomy: counterfactual episode lacks causal annotations");
  }
  const int removed = ann.removed_object;
  const bool touches = std::any_of(ann.events.begin(), ann.events.end(),
                                   [&](const CollisionEvent& e) { return e.a == removed || e.b == removed; });
  if (!touches) return CounterfactualBucket::Disconnected;
  for (std::size_t k = 0; k < ep.choices.size(); ++k) {
    const auto [a, b] = ann.choice_pairs[k];
    const int factual = pair_collides(ann.events, a, b) ? 1 : 0;
    if (factual != ep.choice_answers[k]) return CounterfactualBucket::Hard;
  }
  return CounterfactualBucket::Descriptive;
}

double TaxonomyReport::fraction(CounterfactualBucket b) const {
  return questions ? static_cast<double>(counts[static_cast<std::size_t>(b)]) / questions : 0.0;
}

double TaxonomyReport::accuracy(CounterfactualBucket b) const {
  const auto k = static_cast<std::size_t>(b);
  return scored[k] ? static_cast<double>(correct[k]) / scored[k] : -1.0;
}

nlohmann::json TaxonomyReport::to_json() const {
  nlohmann::json j;
  j["questions"] = questions;
  j["generator_disagreements"] = generator_disagreements;
  for (auto b : {CounterfactualBucket::Disconnected, CounterfactualBucket::Descriptive, CounterfactualBucket::Hard}) {
    const auto k = static_cast<std::size_t>(b);
    j["buckets"][to_string(b)] = {{"count", counts[k]},
                                  {"fraction", fraction(b)},
                                  {"scored", scored[k]},
                                  {"accuracy", accuracy(b)}};
  }
  return j;
}

TaxonomyReport counterfactual_taxonomy(const std::vector<Episode>& episodes, const std::vector<Prediction>& predictions) {
  std::unordered_map<int, const Prediction*> by_episode;
  for (const auto& p : predictions) by_episode[p.episode] = &p;
  TaxonomyReport r;
  for (int i = 0; i < static_cast<int>(episodes.size()); ++i) {
    const auto& ep = episodes[static_cast<std::size_t>(i)];
    if (ep.task != TaskKind::Collision || ep.category != QuestionCategory::Counterfactual) continue;
    const auto bucket = classify_counterfactual(ep);
    const auto k = static_cast<std::size_t>(bucket);
    ++r.questions;
    ++r.counts[k];
    const bool flagged_connected = ep.annotations.removed_connected;
    const bool flagged_answerable = ep.annotations.descriptive_answerable;
    const bool connected = bucket != CounterfactualBucket::Disconnected;
    const bool answerable = bucket != CounterfactualBucket::Hard;
    if (connected != flagged_connected || answerable != flagged_answerable) ++r.generator_disagreements;
    if (auto it = by_episode.find(i); it != by_episode.end()) {
      ++r.scored[k];
      r.correct[k] += it->second->choices == ep.choice_answers;
    }
  }
  return r;
}

}  // namespace objreason
