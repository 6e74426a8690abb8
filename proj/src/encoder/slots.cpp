#include "objreason/encoder/slots.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "objreason/numerics/error.hpp"
#include "objreason/util/random.hpp"

namespace objreason {

std::string to_string(EncoderKind k) {
  switch (k) {
    case EncoderKind::Oracle: return "oracle";
    case EncoderKind::MaskedImage: return "masked-image";
    case EncoderKind::Hyperpixel: return "hyperpixel";
  }
  return "?";
}

EncoderKind parse_encoder(const std::string& s) {
  for (auto k : {EncoderKind::Oracle, EncoderKind::MaskedImage, EncoderKind::Hyperpixel}) {
    if (to_string(k) == s) return k;
  }
  throw ConfigError("unknown encoder '" + s + "'");
}

std::vector<std::vector<int>> random_permutations(int frames, int slots, std::uint64_t seed) {
  Rng rng(derive_seed(seed, 0x9e37));
  std::vector<std::vector<int>> out(static_cast<std::size_t>(frames), std::vector<int>(static_cast<std::size_t>(slots)));
  for (auto& p : out) {
    std::iota(p.begin(), p.end(), 0);
    std::shuffle(p.begin(), p.end(), rng);
  }
  return out;
}

SlotTensor<double> oracle_encode(const Episode& episode, int dim, bool shuffle, std::uint64_t seed, int num_slots) {
  const int slots = num_slots > 0 ? num_slots : episode.num_slots;
  if (episode.object_count() > slots) {
    throw Error("oracle_encode: " + std::to_string(episode.object_count()) + " objects exceed " +
                std::to_string(slots) + " slots");
  }
  const auto space = CategorySpace::for_task(episode.task);
  if (space.feature_width() > dim) {
    throw ConfigError("oracle_encode: latent size " + std::to_string(dim) + " below feature width " +
                      std::to_string(space.feature_width()));
  }
  SlotTensor<double> out;
  out.frames = episode.num_frames;
  out.slots = slots;
  out.dim = dim;
  out.source = EncoderKind::Oracle;
  out.mu = Matrix<double>::Zero(static_cast<Eigen::Index>(out.frames) * slots, dim);
  out.permutations.assign(static_cast<std::size_t>(out.frames), std::vector<int>(static_cast<std::size_t>(slots)));
  for (auto& p : out.permutations) std::iota(p.begin(), p.end(), 0);

  // centered, unit variance for positions uniform over the arena
  const double kPositionScale = std::sqrt(12.0);
  const int nshape = static_cast<int>(space.shapes.size());
  const int ncolor = static_cast<int>(space.colors.size());
  for (int t = 0; t < out.frames; ++t) {
    for (const auto& obj : episode.objects) {
      const auto& st = obj.trajectory.at(static_cast<std::size_t>(t));
      if (!st.visible) continue;
      auto v = out.row(t, obj.id);
      v(space.shape_index(obj.shape)) = 1.0;
      v(nshape + space.color_index(obj.color_at(t))) = 1.0;
      v(nshape + ncolor + std::min(obj.size, space.sizes - 1)) = 1.0;
      const int base = nshape + ncolor + space.sizes;
      v(base) = (st.x / episode.arena - 0.5) * kPositionScale;
      v(base + 1) = (st.y / episode.arena - 0.5) * kPositionScale;
      v(base + 2) = 1.0;
    }
  }
  if (shuffle) return permute_slots(out, random_permutations(out.frames, slots, seed));
  return out;
}

}  // namespace objreason
