#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "objreason/numerics/tensor.hpp"
#include "objreason/scenes/episode.hpp"

namespace objreason {

enum class EncoderKind { Oracle, MaskedImage, Hyperpixel };
std::string to_string(EncoderKind k);
EncoderKind parse_encoder(const std::string& s);

/// Object embeddings for one episode, stored (frames * slots) x dim with
/// frame-major rows. `permutations[t][j]` is the object slot whose vector
/// sits in slot j of frame t.
template <typename Scalar>
struct SlotTensor {
  int frames = 0;
  int slots = 0;
  int dim = 0;
  Matrix<Scalar> mu;
  std::vector<std::vector<int>> permutations;
  EncoderKind source = EncoderKind::Oracle;

  auto row(int t, int i) { return mu.row(static_cast<Eigen::Index>(t) * slots + i); }
  auto row(int t, int i) const { return mu.row(static_cast<Eigen::Index>(t) * slots + i); }
  Tensor<Scalar> tensor() const { return Tensor<Scalar>({frames, slots, dim}, mu); }

  template <typename Other>
  SlotTensor<Other> cast() const {
    return {frames, slots, dim, mu.template cast<Other>(), permutations, source};
  }
};

/// Ground-truth state features: one-hot shape | color | size, then x and y
/// centered on the arena and scaled to unit variance, then a visibility
/// bit, zero-padded to `dim`. Invisible objects and empty slots are zero
/// vectors. With `shuffle`, each
/// frame gets an independent slot permutation drawn from `seed`.
SlotTensor<double> oracle_encode(const Episode& episode, int dim, bool shuffle, std::uint64_t seed,
                                 int num_slots = 0);

/// Per-frame random permutation of slot contents.
template <typename Scalar>
SlotTensor<Scalar> permute_slots(const SlotTensor<Scalar>& in, const std::vector<std::vector<int>>& perms) {
  SlotTensor<Scalar> out = in;
  for (int t = 0; t < in.frames; ++t) {
    for (int j = 0; j < in.slots; ++j) {
      const int src = perms[static_cast<std::size_t>(t)][static_cast<std::size_t>(j)];
      out.row(t, j) = in.row(t, src);
      out.permutations[static_cast<std::size_t>(t)][static_cast<std::size_t>(j)] =
          in.permutations[static_cast<std::size_t>(t)][static_cast<std::size_t>(src)];
    }
  }
  return out;
}

std::vector<std::vector<int>> random_permutations(int frames, int slots, std::uint64_t seed);

}  // namespace objreason
