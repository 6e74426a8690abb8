#include "objreason/selfsup/mask.hpp"

#include <algorithm>

#include "objreason/numerics/error.hpp"

namespace objreason {

std::string to_string(MaskScheme s) {
  return std::string(1, static_cast<char>('a' + static_cast<int>(s)));
}

MaskScheme parse_mask_scheme(const std::string& s) {
  if (s.size() == 1 && s[0] >= 'a' && s[0] <= 'f') return static_cast<MaskScheme>(s[0] - 'a');
  throw ConfigError("unknown mask scheme '" + s + "' (expected a-f)");
}

bool is_buffered(MaskScheme s) { return s != MaskScheme::OnePerFrame && s != MaskScheme::Random; }
bool is_infilling(MaskScheme s) { return s == MaskScheme::InfillSlot || s == MaskScheme::InfillFrame; }

MaskParams MaskParams::from(const KeyValueConfig& cfg) {
  MaskParams p;
  p.hide_probability = cfg.get_double("probability", p.hide_probability);
  p.buffer = cfg.get_int("buffer", p.buffer);
  p.cutoff = cfg.get_int("cutoff", p.cutoff);
  p.target_length = cfg.get_int("target_length", p.target_length);
  if (p.hide_probability < 0.0 || p.hide_probability > 1.0) throw ConfigError("mask.probability must be in [0,1]");
  if (p.buffer < 0) throw ConfigError("mask.buffer must be >= 0");
  return p;
}

int MaskPlan::target_count() const { return static_cast<int>(std::count(target.begin(), target.end(), 1)); }

std::vector<int> MaskPlan::target_rows() const {
  std::vector<int> rows;
  for (std::size_t k = 0; k < target.size(); ++k) {
    if (target[k]) rows.push_back(static_cast<int>(k));
  }
  return rows;
}

MaskPlan MaskPlan::visible(int frames, int slots) {
  MaskPlan p;
  p.frames = frames;
  p.slots = slots;
  p.keep.assign(static_cast<std::size_t>(frames * slots), 1);
  p.target.assign(static_cast<std::size_t>(frames * slots), 0);
  return p;
}

namespace {

void hide_frame(MaskPlan& p, int t) {
  for (int i = 0; i < p.slots; ++i) p.keep[static_cast<std::size_t>(t * p.slots + i)] = 0;
}

void mark_targets(MaskPlan& p, int t, bool whole_frame, Rng& rng) {
  hide_frame(p, t);
  if (whole_frame) {
    for (int i = 0; i < p.slots; ++i) p.target[static_cast<std::size_t>(t * p.slots + i)] = 1;
  } else {
    p.target[static_cast<std::size_t>(t * p.slots + uniform_int(rng, 0, p.slots - 1))] = 1;
  }
}

}  // namespace

MaskPlan sample_mask_plan(MaskScheme scheme, int frames, int slots, Rng& rng, const MaskParams& params) {
  if (frames <= 0 || slots <= 0) throw ConfigError("sample_mask_plan: frames and slots must be positive");
  MaskPlan p = MaskPlan::visible(frames, slots);
  p.scheme = scheme;
  const int B = params.buffer;
  switch (scheme) {
    case MaskScheme::OnePerFrame:
      for (int t = 0; t < frames; ++t) {
        const auto k = static_cast<std::size_t>(t * slots + uniform_int(rng, 0, slots - 1));
        p.keep[k] = 0;
        p.target[k] = 1;
      }
      return p;
    case MaskScheme::Random:
      for (std::size_t k = 0; k < p.keep.size(); ++k) {
        if (bernoulli(rng, params.hide_probability)) {
          p.keep[k] = 0;
          p.target[k] = 1;
        }
      }
      return p;
    case MaskScheme::PredictSlot:
    case MaskScheme::PredictFrame: {
      if (frames < B + 2) throw ConfigError("prediction masking needs at least buffer + 2 frames");
      const int T = params.cutoff >= 0 ? params.cutoff : uniform_int(rng, 1, frames - B - 1);
      if (T < 1 || T + B >= frames) throw ConfigError("prediction masking: cutoff out of range");
      p.cutoff = T;
      p.buffer = B;
      p.target_begin = T + B;
      p.target_end = frames;
      break;
    }
    case MaskScheme::InfillSlot:
    case MaskScheme::InfillFrame: {
      if (frames < 2 * B + 3) throw ConfigError("infilling masking needs at least 2 * buffer + 3 frames");
      const int T = params.cutoff >= 0 ? params.cutoff : uniform_int(rng, 1, frames - 2 * B - 2);
      const int room = frames - 2 * B - 1 - T;
      if (T < 1 || room < 1) throw ConfigError("infilling masking: cutoff out of range");
      const int K = params.target_length > 0 ? params.target_length : uniform_int(rng, 1, room);
      if (K > room) throw ConfigError("infilling masking: target block does not fit");
      p.cutoff = T;
      p.buffer = B;
      p.target_begin = T + B;
      p.target_end = T + B + K;
      for (int t = p.target_end; t < p.target_end + B; ++t) hide_frame(p, t);
      break;
    }
  }
  for (int t = p.cutoff; t < p.target_begin; ++t) hide_frame(p, t);
  const bool whole = scheme == MaskScheme::PredictFrame || scheme == MaskScheme::InfillFrame;
  for (int t = p.target_begin; t < p.target_end; ++t) mark_targets(p, t, whole, rng);
  return p;
}

std::string check_mask_plan(const MaskPlan& p) {
  const auto n = static_cast<std::size_t>(p.frames * p.slots);
  if (p.keep.size() != n || p.target.size() != n) return "plan arrays have the wrong size";
  for (std::size_t k = 0; k < n; ++k) {
    if (p.target[k] && p.keep[k]) return "target slot is visible";
  }
  auto frame_hidden = [&](int t) {
    for (int i = 0; i < p.slots; ++i) {
      if (p.kept(t, i)) return 0;
    }
    return 1;
  };
  auto frame_targets = [&](int t) {
    int c = 0;
    for (int i = 0; i < p.slots; ++i) c += p.is_target(t, i);
    return c;
  };
  switch (p.scheme) {
    case MaskScheme::OnePerFrame:
      for (int t = 0; t < p.frames; ++t) {
        int hidden = 0;
        for (int i = 0; i < p.slots; ++i) hidden += !p.kept(t, i);
        if (hidden != 1 || frame_targets(t) != 1) return "frame " + std::to_string(t) + " must hide exactly one slot";
      }
      return {};
    case MaskScheme::Random:
      for (std::size_t k = 0; k < n; ++k) {
        if (p.target[k] != !p.keep[k]) return "hidden and target slots differ";
      }
      return {};
    default: break;
  }
  const bool whole = p.scheme == MaskScheme::PredictFrame || p.scheme == MaskScheme::InfillFrame;
  const int after = is_infilling(p.scheme) ? p.target_end + p.buffer : p.frames;
  if (p.cutoff < 1 || p.target_begin != p.cutoff + p.buffer || p.target_end <= p.target_begin) {
    return "buffered layout is inconsistent";
  }
  if (is_infilling(p.scheme) ? after >= p.frames : p.target_end != p.frames) return "context placement is wrong";
  for (int t = 0; t < p.frames; ++t) {
    const bool buffer = (t >= p.cutoff && t < p.target_begin) || (t >= p.target_end && t < after);
    const bool target = t >= p.target_begin && t < p.target_end;
    if (buffer) {
      if (!frame_hidden(t) || frame_targets(t) != 0) return "buffer frame " + std::to_string(t) + " is wrong";
    } else if (target) {
      if (!frame_hidden(t) || frame_targets(t) != (whole ? p.slots : 1)) {
        return "target frame " + std::to_string(t) + " is wrong";
      }
    } else {
      for (int i = 0; i < p.slots; ++i) {
        if (!p.kept(t, i) || p.is_target(t, i)) return "context frame " + std::to_string(t) + " is not visible";
      }
    }
  }
  return {};
}

nlohmann::json mask_plan_to_json(const MaskPlan& p) {
  nlohmann::json j;
  j["scheme"] = to_string(p.scheme);
  j["frames"] = p.frames;
  j["slots"] = p.slots;
  j["keep"] = p.keep;
  j["target"] = p.target;
  if (is_buffered(p.scheme)) {
    j["cutoff"] = p.cutoff;
    j["buffer"] = p.buffer;
    j["target_frames"] = {p.target_begin, p.target_end};
  }
  return j;
}

}  // namespace objreason
