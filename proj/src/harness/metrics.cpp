#include "objreason/harness/metrics.hpp"

#include <algorithm>
#include <cstdlib>

#include "objreason/numerics/error.hpp"

namespace objreason {

nlohmann::json MetricsRecord::to_json() const {
  nlohmann::json j;
  j["step"] = step;
  j["split"] = split;
  j["questions"] = questions;
  j["accuracy"] = accuracy;
  if (!by_category.empty()) j["by_category"] = by_category;
  if (mc_per_question >= 0) {
    j["mc_per_question"] = mc_per_question;
    j["mc_per_option"] = mc_per_option;
  }
  if (top1 >= 0) {
    j["top1"] = top1;
    j["top5"] = top5;
    j["mean_l1"] = mean_l1;
  }
  if (!by_reasoning.empty()) j["by_reasoning"] = by_reasoning;
  if (!by_split.empty()) j["by_split"] = by_split;
  if (!losses.empty()) j["losses"] = losses;
  return j;
}

namespace {

struct Tally {
  int n = 0;
  int correct = 0;
  void add(bool ok) {
    ++n;
    correct += ok;
  }
  double rate() const { return n ? double(correct) / n : 0.0; }
};

}  // namespace

MetricsRecord score_predictions(const std::vector<Episode>& episodes, std::vector<Prediction>& predictions, int grid) {
  MetricsRecord m;
  Tally overall, mc_question, mc_option, top5;
  std::map<std::string, Tally> by_category, by_reasoning, by_split;
  double l1 = 0.0;
  bool snitch = false;
  for (auto& p : predictions) {
    if (p.episode < 0 || p.episode >= static_cast<int>(episodes.size())) throw Error("prediction for unknown episode");
    const auto& ep = episodes[static_cast<std::size_t>(p.episode)];
    if (ep.multiple_choice()) {
      if (p.choices.size() != ep.choices.size()) throw Error("prediction has the wrong number of choices");
      bool all = true;
      for (std::size_t k = 0; k < p.choices.size(); ++k) {
        const bool ok = p.choices[k] == ep.choice_answers[k];
        mc_option.add(ok);
        all = all && ok;
      }
      p.correct = all;
      mc_question.add(all);
    } else {
      p.correct = p.predicted == ep.answer;
    }
    if (ep.task == TaskKind::Snitch) {
      snitch = true;
      top5.add(std::find(p.top5.begin(), p.top5.end(), ep.answer) != p.top5.end());
      l1 += std::abs(p.predicted / grid - ep.answer / grid) + std::abs(p.predicted % grid - ep.answer % grid);
    }
    overall.add(p.correct);
    if (ep.category != QuestionCategory::None) by_category[to_string(ep.category)].add(p.correct);
    if (ep.task == TaskKind::Blicket) {
      by_reasoning[to_string(ep.reasoning)].add(p.correct);
      by_split[ep.annotations.heldout ? to_string(ep.split_kind) : "iid"].add(p.correct);
    }
  }
  m.questions = overall.n;
  m.accuracy = overall.rate();
  for (const auto& [k, t] : by_category) m.by_category[k] = t.rate();
  for (const auto& [k, t] : by_reasoning) m.by_reasoning[k] = t.rate();
  for (const auto& [k, t] : by_split) m.by_split[k] = t.rate();
  if (mc_question.n > 0) {
    m.mc_per_question = mc_question.rate();
    m.mc_per_option = mc_option.rate();
  }
  if (snitch) {
    m.top1 = overall.rate();
    m.top5 = top5.rate();
    m.mean_l1 = overall.n ? l1 / overall.n : 0.0;
  }
  return m;
}

}  // namespace objreason
