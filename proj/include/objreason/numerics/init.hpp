#pragma once

#include <cmath>
#include <random>

#include "objreason/numerics/tensor.hpp"

namespace objreason {

/// Gaussian entries with standard deviation sqrt(gain / fan_in); fan_in is
/// the row count (weights are applied as x * W).
template <typename Scalar>
Matrix<Scalar> scaled_normal(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng, double gain = 1.0) {
  std::normal_distribution<double> n(0.0, std::sqrt(gain / static_cast<double>(rows)));
  Matrix<Scalar> m(rows, cols);
  for (Eigen::Index k = 0; k < m.size(); ++k) m.data()[k] = static_cast<Scalar>(n(rng));
  return m;
}

}  // namespace objreason
