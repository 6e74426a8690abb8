#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace objreason {

enum class TaskKind { Collision, Snitch, Blicket };
enum class QuestionCategory { None, Descriptive, Explanatory, Predictive, Counterfactual };
enum class ReasoningType { None, Direct, Indirect, ScreenOff, BackwardBlocking };
enum class BlicketAnswer { Yes = 0, No = 1, Undetermined = 2 };
enum class SplitKind { Iid, Compositional, Systematic };

std::string to_string(TaskKind k);
std::string to_string(QuestionCategory c);
std::string to_string(ReasoningType r);
std::string to_string(BlicketAnswer a);
std::string to_string(SplitKind s);
TaskKind parse_task(const std::string& s);
QuestionCategory parse_category(const std::string& s);
ReasoningType parse_reasoning(const std::string& s);
SplitKind parse_split_kind(const std::string& s);

// Global category codes. Each task uses a subset (see CategorySpace).
namespace shape {
inline constexpr int kCube = 0, kSphere = 1, kCylinder = 2, kCone = 3, kSnitch = 4, kMachine = 5;
}
namespace color {
inline constexpr int kLit = 7, kUnlit = 8, kUnknown = 9;
}
inline constexpr int kNumObjectColors = 6;
inline constexpr int kNumColorCodes = 10;

/// Categories a task can emit; fixes the one-hot layout of oracle features.
struct CategorySpace {
  std::vector<int> shapes;
  std::vector<int> colors;
  int sizes = 1;

  int shape_index(int code) const;
  int color_index(int code) const;
  /// one-hot blocks + (x, y) + visibility
  int feature_width() const { return static_cast<int>(shapes.size() + colors.size()) + sizes + 3; }

  static CategorySpace for_task(TaskKind task);
};

/// Per-frame state of one object.
struct ObjectState {
  double x = 0.0;  // arena units, column direction
  double y = 0.0;  // arena units, row direction (down)
  bool visible = true;
  int container = -1;  // id of the containing object, -1 when free
  int color = -1;      // per-frame color code override, -1 keeps the object's own
};

struct SceneObject {
  int id = 0;
  int shape = 0;
  int color = 0;
  int size = 0;
  int layer = 0;  // painter's order: lower layers are drawn first
  double radius = 0.5;  // arena units
  std::vector<ObjectState> trajectory;  // one entry per frame

  int color_at(int frame) const {
    const int c = trajectory.at(static_cast<std::size_t>(frame)).color;
    return c >= 0 ? c : color;
  }
};

/// 8-bit RGB image, row-major H x W x 3.
struct Image {
  int height = 0;
  int width = 0;
  std::vector<std::uint8_t> rgb;

  Image() = default;
  Image(int h, int w) : height(h), width(w), rgb(static_cast<std::size_t>(h * w * 3), 0) {}
  std::uint8_t& at(int r, int c, int ch) { return rgb[static_cast<std::size_t>((r * width + c) * 3 + ch)]; }
  std::uint8_t at(int r, int c, int ch) const {
    return rgb[static_cast<std::size_t>((r * width + c) * 3 + ch)];
  }
  bool operator==(const Image&) const = default;
};

/// Per-frame slot ownership: 0 is background, i + 1 is slot i. The binary
/// mask A_ti is (label == i + 1); masks are disjoint by construction.
struct LabelMap {
  int height = 0;
  int width = 0;
  std::vector<std::uint8_t> labels;

  LabelMap() = default;
  LabelMap(int h, int w) : height(h), width(w), labels(static_cast<std::size_t>(h * w), 0) {}
  std::uint8_t& at(int r, int c) { return labels[static_cast<std::size_t>(r * width + c)]; }
  std::uint8_t at(int r, int c) const { return labels[static_cast<std::size_t>(r * width + c)]; }
  bool mask(int slot, int r, int c) const { return at(r, c) == slot + 1; }
  bool operator==(const LabelMap&) const = default;
};

struct CollisionEvent {
  int frame = 0;  // first rendered frame after contact
  int a = 0;      // object ids, a < b
  int b = 0;
  long substep = 0;
  bool operator==(const CollisionEvent&) const = default;
};

struct Annotations {
  // collision task
  std::vector<CollisionEvent> events;         // within the rendered window
  std::vector<CollisionEvent> future_events;  // after the last rendered frame
  std::vector<std::pair<int, int>> causal_edges;  // event index -> later event index sharing an object
  std::vector<std::pair<int, int>> choice_pairs;  // object pair (or object, -1) named by each choice
  int removed_object = -1;
  std::vector<CollisionEvent> counterfactual_events;
  bool removed_connected = false;
  bool descriptive_answerable = false;
  std::vector<int> factual_choice_labels;
  int target_event = -1;  // explanatory questions
  std::vector<std::array<double, 2>> initial_velocities;  // per object, arena units per frame
  int substeps = 0;

  // snitch task
  int snitch_id = -1;
  bool snitch_visible_final = true;
  int grid = 0;

  // blicket task
  std::vector<bool> blickets;
  std::vector<std::vector<int>> panels;  // object ids per frame (context + query)
  std::vector<bool> lit;                 // context panels only
  int lit_contexts = 0;
  bool heldout = false;
  std::vector<int> machine_activations;  // context frame indices that lit
};

struct Episode {
  TaskKind task = TaskKind::Collision;
  std::uint64_t seed = 0;
  int num_frames = 0;
  int num_slots = 0;
  int height = 32;
  int width = 32;
  double arena = 8.0;  // arena side length in position units
  std::vector<SceneObject> objects;  // object k sits in slot k
  std::vector<Image> frames;         // empty when not rendered
  std::vector<LabelMap> masks;       // parallel to frames

  std::vector<int> question;
  std::vector<std::vector<int>> choices;
  QuestionCategory category = QuestionCategory::None;
  int answer = -1;                 // answer class, grid cell, or BlicketAnswer
  std::vector<int> choice_answers;  // 0/1 per choice
  ReasoningType reasoning = ReasoningType::None;
  SplitKind split_kind = SplitKind::Iid;
  Annotations annotations;

  bool rendered() const { return !frames.empty(); }
  bool multiple_choice() const { return !choices.empty(); }
  int object_count() const { return static_cast<int>(objects.size()); }
};

}  // namespace objreason
