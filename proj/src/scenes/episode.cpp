#include "objreason/scenes/episode.hpp"

#include <algorithm>

#include "objreason/numerics/error.hpp"

namespace objreason {

std::string to_string(TaskKind k) {
  switch (k) {
    case TaskKind::Collision: return "collision";
    case TaskKind::Snitch: return "snitch";
    case TaskKind::Blicket: return "blicket";
  }
  return "?";
}

std::string to_string(QuestionCategory c) {
  switch (c) {
    case QuestionCategory::None: return "none";
    case QuestionCategory::Descriptive: return "descriptive";
    case QuestionCategory::Explanatory: return "explanatory";
    case QuestionCategory::Predictive: return "predictive";
    case QuestionCategory::Counterfactual: return "counterfactual";
  }
  return "?";
}

std::string to_string(ReasoningType r) {
  switch (r) {
    case ReasoningType::None: return "none";
    case ReasoningType::Direct: return "direct";
    case ReasoningType::Indirect: return "indirect";
    case ReasoningType::ScreenOff: return "screen-off";
    case ReasoningType::BackwardBlocking: return "backward-blocking";
  }
  return "?";
}

std::string to_string(BlicketAnswer a) {
  switch (a) {
    case BlicketAnswer::Yes: return "yes";
    case BlicketAnswer::No: return "no";
    case BlicketAnswer::Undetermined: return "undetermined";
  }
  return "?";
}

std::string to_string(SplitKind s) {
  switch (s) {
    case SplitKind::Iid: return "iid";
    case SplitKind::Compositional: return "compositional";
    case SplitKind::Systematic: return "systematic";
  }
  return "?";
}

TaskKind parse_task(const std::string& s) {
  if (s == "collision") return TaskKind::Collision;
  if (s == "snitch") return TaskKind::Snitch;
  if (s == "blicket") return TaskKind::Blicket;
  throw ConfigError("unknown task '" + s + "'");
}

QuestionCategory parse_category(const std::string& s) {
  for (auto c : {QuestionCategory::None, QuestionCategory::Descriptive, QuestionCategory::Explanatory,
                 QuestionCategory::Predictive, QuestionCategory::Counterfactual}) {
    if (to_string(c) == s) return c;
  }
  throw ConfigError("unknown question category '" + s + "'");
}

ReasoningType parse_reasoning(const std::string& s) {
  for (auto r : {ReasoningType::None, ReasoningType::Direct, ReasoningType::Indirect,
                 ReasoningType::ScreenOff, ReasoningType::BackwardBlocking}) {
    if (to_string(r) == s) return r;
  }
  throw ConfigError("unknown reasoning type '" + s + "'");
}

SplitKind parse_split_kind(const std::string& s) {
  for (auto k : {SplitKind::Iid, SplitKind::Compositional, SplitKind::Systematic}) {
    if (to_string(k) == s) return k;
  }
  throw ConfigError("unknown split kind '" + s + "'");
}

int CategorySpace::shape_index(int code) const {
  auto it = std::find(shapes.begin(), shapes.end(), code);
  if (it == shapes.end()) throw Error("shape code " + std::to_string(code) + " not in task category space");
  return static_cast<int>(it - shapes.begin());
}

int CategorySpace::color_index(int code) const {
  auto it = std::find(colors.begin(), colors.end(), code);
  if (it == colors.end()) throw Error("color code " + std::to_string(code) + " not in task category space");
  return static_cast<int>(it - colors.begin());
}

CategorySpace CategorySpace::for_task(TaskKind task) {
  switch (task) {
    case TaskKind::Collision:
      return {{shape::kCube, shape::kSphere, shape::kCylinder}, {0, 1, 2, 3, 4, 5}, 2};
    case TaskKind::Snitch:
      return {{shape::kCube, shape::kSphere, shape::kCylinder, shape::kCone, shape::kSnitch},
              {0, 1, 2, 3, 4, 5, 6},
              1};
    case TaskKind::Blicket:
      return {{shape::kCube, shape::kSphere, shape::kCylinder, shape::kMachine},
              {0, 1, 2, 3, 4, color::kLit, color::kUnlit, color::kUnknown},
              1};
  }
  throw Error("unknown task");
}

}  // namespace objreason
