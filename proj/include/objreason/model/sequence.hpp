#pragma once

#include <vector>

#include "objreason/model/config.hpp"
#include "objreason/numerics.hpp"

namespace objreason {

enum class Modality { Object, Word, Cls };

struct ElementInfo {
  Modality modality = Modality::Object;
  int frame = -1;
  int slot = -1;
  int word = -1;
  int position = 0;  // index on the shared frame/word line
};

/// One sequence before projection: L x (d + 2) rows ordered objects
/// (frame-major), words, CLS.
template <typename Scalar>
struct InputSequence {
  Var<Scalar> vectors;
  std::vector<ElementInfo> elements;
  int frames = 0;
  int slots = 0;
  int words = 0;

  int length() const { return static_cast<int>(elements.size()); }
  int cls_index() const { return length() - 1; }
};

/// Element layout and positions for F frames of N slots and W words.
std::vector<ElementInfo> sequence_layout(int frames, int slots, int words);

/// Sinusoidal table over relative offsets -(P-1) .. P-1; row o + P - 1 is
/// offset o with sin on even and cos on odd columns at frequency
/// 10000^(-2*floor(k/2)/D).
Matrix<double> relative_table(int max_position, int width);

/// (query, key) rows into relative_table for a layout.
IndexMatrix relative_offsets(const std::vector<ElementInfo>& elements, int max_position);

struct AssembleOptions {
  bool detach_embeddings = false;  // stop gradients into word and CLS vectors
};

/// Adds the modality tag (object (1,0), word (0,1), CLS (0,0)) and appends
/// the word embeddings and the learned CLS vector to frame-major slots.
template <typename Scalar>
InputSequence<Scalar> assemble_inputs(Graph<Scalar>& g, const ParamStore<Scalar>& params, Var<Scalar> slots,
                                      int frames, int num_slots, const std::vector<int>& words,
                                      const AssembleOptions& opts = {}) {
  const auto d = params.get("embed.cls").cols();
  if (slots.cols() != d || slots.rows() != static_cast<Eigen::Index>(frames) * num_slots) {
    throw ShapeError("assemble_inputs", slots.id,
                     "slots are " + std::to_string(slots.rows()) + "x" + std::to_string(slots.cols()) +
                         ", expected " + std::to_string(frames * num_slots) + "x" + std::to_string(d));
  }
  const auto vocab = params.get("embed.words").rows();
  for (int w : words) {
    if (w < 0 || w >= vocab) throw Error("assemble_inputs: unknown token id " + std::to_string(w));
  }
  InputSequence<Scalar> seq;
  seq.frames = frames;
  seq.slots = num_slots;
  seq.words = static_cast<int>(words.size());
  seq.elements = sequence_layout(frames, num_slots, seq.words);

  auto tag = [&](Eigen::Index rows, Scalar a, Scalar b) {
    Matrix<Scalar> m(rows, 2);
    m.col(0).setConstant(a);
    m.col(1).setConstant(b);
    return g.constant(std::move(m));
  };
  auto embed = g.param(params, "embed.words");
  auto cls = g.param(params, "embed.cls");
  if (opts.detach_embeddings) {
    embed = stop_gradient(embed);
    cls = stop_gradient(cls);
  }
  std::vector<Var<Scalar>> parts;
  if (slots.rows() > 0) parts.push_back(concat_cols<Scalar>({slots, tag(slots.rows(), 1, 0)}));
  if (!words.empty()) {
    parts.push_back(concat_cols<Scalar>({gather_rows(embed, words), tag(seq.words, 0, 1)}));
  }
  parts.push_back(concat_cols<Scalar>({cls, tag(1, 0, 0)}));
  seq.vectors = concat_rows(parts);
  return seq;
}

/// Shared affine map R^(d+2) -> R^D followed by ReLU.
template <typename Scalar>
Var<Scalar> project_inputs(Graph<Scalar>& g, const ParamStore<Scalar>& params, Var<Scalar> vectors) {
  return relu(linear(vectors, g.param(params, "proj.weight"), g.param(params, "proj.bias")));
}

}  // namespace objreason
