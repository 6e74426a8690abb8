#pragma once

#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "objreason/scenes/episode.hpp"

namespace objreason {

/// One evaluation (or training-progress) record. Unused groups stay empty
/// and are left out of the JSON line.
struct MetricsRecord {
  long step = 0;
  std::string split;
  int questions = 0;
  double accuracy = 0.0;  // per question
  std::map<std::string, double> by_category;
  double mc_per_question = -1.0;  // collision multiple choice; -1 when absent
  double mc_per_option = -1.0;
  double top1 = -1.0;  // snitch
  double top5 = -1.0;
  double mean_l1 = -1.0;
  std::map<std::string, double> by_reasoning;  // blicket
  std::map<std::string, double> by_split;
  std::map<std::string, double> losses;

  nlohmann::json to_json() const;
  std::string to_line() const { return to_json().dump(); }
};

/// Model output for one episode.
struct Prediction {
  int episode = -1;
  bool correct = false;
  int predicted = -1;              // answer class, cell or ternary answer
  std::vector<int> choices;        // 0/1 per choice
  std::vector<int> top5;           // snitch
};

struct EvalOutput {
  MetricsRecord metrics;
  std::vector<Prediction> predictions;
};

/// Marks each prediction correct or not and aggregates. A multiple-choice
/// question counts only when every choice is right; snitch rows also need
/// their top-5 cells.
MetricsRecord score_predictions(const std::vector<Episode>& episodes, std::vector<Prediction>& predictions, int grid);

}  // namespace objreason
