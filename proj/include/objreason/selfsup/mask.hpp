#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "objreason/encoder/slots.hpp"
#include "objreason/numerics/graph.hpp"
#include "objreason/util/kv_config.hpp"
#include "objreason/util/random.hpp"

namespace objreason {

// a: one hidden slot per frame; b: independent Bernoulli hiding;
// c/d: prediction after a hidden buffer; e/f: infilling between buffers.
// c and e target one random slot per target frame, d and f every slot.
enum class MaskScheme { OnePerFrame, Random, PredictSlot, PredictFrame, InfillSlot, InfillFrame };

std::string to_string(MaskScheme s);  // "a" .. "f"
MaskScheme parse_mask_scheme(const std::string& s);
inline const std::vector<MaskScheme> kAllMaskSchemes = {MaskScheme::OnePerFrame,  MaskScheme::Random,
                                                        MaskScheme::PredictSlot, MaskScheme::PredictFrame,
                                                        MaskScheme::InfillSlot,  MaskScheme::InfillFrame};

bool is_buffered(MaskScheme s);
bool is_infilling(MaskScheme s);

struct MaskParams {
  double hide_probability = 0.15;  // scheme b
  int buffer = 3;
  int cutoff = -1;        // first buffer frame; -1 draws it
  int target_length = -1;  // infilling target block; -1 draws it

  static MaskParams from(const KeyValueConfig& cfg);  // keys under "mask."
};

/// keep = 0 zeroes the slot at the input; target = 1 makes it a prediction
/// target. Targets are always hidden; buffer frames are hidden and never
/// targets.
struct MaskPlan {
  MaskScheme scheme = MaskScheme::OnePerFrame;
  int frames = 0;
  int slots = 0;
  std::vector<std::uint8_t> keep;
  std::vector<std::uint8_t> target;
  int cutoff = -1;
  int buffer = 0;
  int target_begin = -1;  // buffered schemes: target frames [target_begin, target_end)
  int target_end = -1;

  bool kept(int t, int i) const { return keep[static_cast<std::size_t>(t * slots + i)] != 0; }
  bool is_target(int t, int i) const { return target[static_cast<std::size_t>(t * slots + i)] != 0; }
  int target_count() const;
  std::vector<int> target_rows() const;  // frame-major row indices

  static MaskPlan visible(int frames, int slots);
};

MaskPlan sample_mask_plan(MaskScheme scheme, int frames, int slots, Rng& rng, const MaskParams& params = {});

/// First violated law of the scheme, or an empty string.
std::string check_mask_plan(const MaskPlan& plan);

nlohmann::json mask_plan_to_json(const MaskPlan& plan);

template <typename Scalar>
Matrix<Scalar> keep_matrix(const MaskPlan& plan, Eigen::Index dim) {
  Matrix<Scalar> m(static_cast<Eigen::Index>(plan.frames) * plan.slots, dim);
  for (int t = 0; t < plan.frames; ++t) {
    for (int i = 0; i < plan.slots; ++i) m.row(t * plan.slots + i).setConstant(plan.kept(t, i) ? Scalar(1) : Scalar(0));
  }
  return m;
}

/// Hidden slots become exact zero vectors; the input is left untouched.
template <typename Scalar>
SlotTensor<Scalar> apply_mask(const SlotTensor<Scalar>& slots, const MaskPlan& plan) {
  if (plan.frames != slots.frames || plan.slots != slots.slots) {
    throw ShapeError("apply_mask", -1, "plan does not match slot tensor");
  }
  SlotTensor<Scalar> out = slots;
  for (int t = 0; t < plan.frames; ++t) {
    for (int i = 0; i < plan.slots; ++i) {
      if (!plan.kept(t, i)) out.row(t, i).setZero();
    }
  }
  return out;
}

/// Graph form for slot embeddings produced by a learned encoder.
template <typename Scalar>
Var<Scalar> apply_mask(Var<Scalar> slots, const MaskPlan& plan) {
  if (slots.rows() != static_cast<Eigen::Index>(plan.frames) * plan.slots) {
    throw ShapeError("apply_mask", slots.id, "plan does not match slot rows");
  }
  return cmul(slots, slots.graph->constant(keep_matrix<Scalar>(plan, slots.cols())));
}

}  // namespace objreason
