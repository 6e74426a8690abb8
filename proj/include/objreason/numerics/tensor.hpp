#pragma once

#include <Eigen/Dense>

#include <functional>
#include <numeric>
#include <string>
#include <vector>

#include "objreason/numerics/error.hpp"

namespace objreason {

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

template <typename Scalar>
using RowVector = Eigen::Matrix<Scalar, 1, Eigen::Dynamic>;

using IndexMatrix = Eigen::Matrix<int, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using BoolMatrix = Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

using Shape = std::vector<Eigen::Index>;

inline Eigen::Index shape_size(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), Eigen::Index{1}, std::multiplies<>());
}

inline std::string shape_string(const Shape& shape) {
  std::string out = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) out += "x";
    out += std::to_string(shape[i]);
  }
  return out + "]";
}

/// Dense real tensor of arbitrary rank.
///
/// Storage is a row-major matrix whose column count is the last extent and
/// whose row count is the product of the leading extents, so a
/// [F x N x d] tensor is laid out as (F*N) x d. Rank-0 tensors are 1x1.
template <typename Scalar>
struct Tensor {
  Shape shape;
  Matrix<Scalar> values;

  Tensor() = default;

  explicit Tensor(Shape s) : shape(std::move(s)) {
    const auto [r, c] = storage_extents(shape);
    values = Matrix<Scalar>::Zero(r, c);
  }

  Tensor(Shape s, Matrix<Scalar> v) : shape(std::move(s)), values(std::move(v)) {
    const auto [r, c] = storage_extents(shape);
    if (values.rows() != r || values.cols() != c) {
      throw Error("Tensor: values " + std::to_string(values.rows()) + "x" +
                  std::to_string(values.cols()) + " do not match shape " +
                  shape_string(shape));
    }
  }

  static Tensor from_matrix(Matrix<Scalar> m) {
    Shape s{m.rows(), m.cols()};
    return Tensor(std::move(s), std::move(m));
  }

  Eigen::Index size() const { return values.size(); }
  std::size_t rank() const { return shape.size(); }

  template <typename Other>
  Tensor<Other> cast() const {
    return Tensor<Other>(shape, values.template cast<Other>());
  }

  static std::pair<Eigen::Index, Eigen::Index> storage_extents(const Shape& s) {
    if (s.empty()) return {1, 1};
    Eigen::Index rows = 1;
    for (std::size_t i = 0; i + 1 < s.size(); ++i) rows *= s[i];
    return {rows, s.back()};
  }
};

}  // namespace objreason
