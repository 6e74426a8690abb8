#pragma once

#include <cstdlib>
#include <vector>

#include "objreason/model/config.hpp"
#include "objreason/numerics.hpp"

namespace objreason {

/// One-hidden-layer MLP on the CLS output; B x outputs logits.
template <typename Scalar>
Var<Scalar> head_logits(Graph<Scalar>& g, const ParamStore<Scalar>& p, HeadKind kind, Var<Scalar> cls) {
  const std::string q = "head." + to_string(kind);
  auto h = relu(linear(cls, g.param(p, q + ".hidden.weight"), g.param(p, q + ".hidden.bias")));
  return linear(h, g.param(p, q + ".out.weight"), g.param(p, q + ".out.bias"));
}

/// Softmax over answers / cells / {yes, no, undetermined}.
template <typename Scalar>
Var<Scalar> head_distribution(Graph<Scalar>& g, const ParamStore<Scalar>& p, HeadKind kind, Var<Scalar> cls) {
  return softmax_rows(head_logits(g, p, kind, cls));
}

/// Probability that each choice is true, B x 1.
template <typename Scalar>
Var<Scalar> head_choice(Graph<Scalar>& g, const ParamStore<Scalar>& p, Var<Scalar> cls) {
  return sigmoid(head_logits(g, p, HeadKind::Choice, cls));
}

inline int grid_distance(int a, int b, int grid) {
  return std::abs(a / grid - b / grid) + std::abs(a % grid - b % grid);
}

/// Differentiable surrogate sum_c p(c) * manhattan(c, truth); B x 1.
template <typename Scalar>
Var<Scalar> expected_l1(Var<Scalar> probs, const std::vector<int>& truth, int grid) {
  auto& g = *probs.graph;
  const Eigen::Index cells = static_cast<Eigen::Index>(grid) * grid;
  if (probs.cols() != cells || probs.rows() != static_cast<Eigen::Index>(truth.size())) {
    throw ShapeError("expected_l1", probs.id, "expects B x grid^2 probabilities and B truths");
  }
  Matrix<Scalar> dist(probs.rows(), cells);
  for (Eigen::Index r = 0; r < dist.rows(); ++r) {
    for (Eigen::Index c = 0; c < cells; ++c) {
      dist(r, c) = static_cast<Scalar>(grid_distance(static_cast<int>(c), truth[static_cast<std::size_t>(r)], grid));
    }
  }
  return sum_rows(cmul(probs, g.constant(std::move(dist))));
}

/// Index of the largest entry in each row; ties go to the lowest index.
template <typename Scalar>
std::vector<int> argmax_rows(const Matrix<Scalar>& m) {
  std::vector<int> out(static_cast<std::size_t>(m.rows()));
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    Eigen::Index best = 0;
    for (Eigen::Index c = 1; c < m.cols(); ++c) {
      if (m(r, c) > m(r, best)) best = c;
    }
    out[static_cast<std::size_t>(r)] = static_cast<int>(best);
  }
  return out;
}

}  // namespace objreason
