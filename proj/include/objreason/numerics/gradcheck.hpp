#pragma once

#include <cmath>
#include <functional>
#include <string>

#include "objreason/numerics/graph.hpp"

namespace objreason {

/// Builds a scalar loss from parameters inside a fresh graph.
template <typename Scalar>
using LossBuilder = std::function<Var<Scalar>(Graph<Scalar>&, const ParamStore<Scalar>&)>;

/// Compares the reverse-mode gradient of `loss` with respect to parameter
/// `leaf` against central differences. Returns
///   max_k |analytic_k - numeric_k| / max(|numeric_k|, floor).
/// Intended for 64-bit parameter stores, where a step of 1e-5 resolves
/// derivatives to about 1e-10 absolute; the floor keeps components that
/// are structurally near zero from turning rounding noise into ratios.
template <typename Scalar>
double finite_diff_check(const LossBuilder<Scalar>& loss, ParamStore<Scalar>& params,
                         const std::string& leaf, double step = 1e-5, double floor = 1e-5) {
  Matrix<Scalar> analytic;
  {
    Graph<Scalar> g;
    auto out = loss(g, params);
    analytic = gradient(g, out, params, {leaf}).at(leaf);
  }
  auto& w = params.get_mutable(leaf);
  double worst = 0.0;
  for (Eigen::Index k = 0; k < w.size(); ++k) {
    const Scalar saved = w.data()[k];
    w.data()[k] = saved + Scalar(step);
    double plus;
    {
      Graph<Scalar> g;
      plus = static_cast<double>(loss(g, params).value()(0, 0));
    }
    w.data()[k] = saved - Scalar(step);
    double minus;
    {
      Graph<Scalar> g;
      minus = static_cast<double>(loss(g, params).value()(0, 0));
    }
    w.data()[k] = saved;
    const double numeric = (plus - minus) / (2.0 * step);
    const double a = static_cast<double>(analytic.data()[k]);
    worst = std::max(worst, std::abs(a - numeric) / std::max(std::abs(numeric), floor));
  }
  return worst;
}

/// Worst relative error over every parameter in the store.
template <typename Scalar>
double finite_diff_check_all(const LossBuilder<Scalar>& loss, ParamStore<Scalar>& params,
                             double step = 1e-5, double floor = 1e-5) {
  double worst = 0.0;
  for (const auto& name : params.names()) {
    worst = std::max(worst, finite_diff_check(loss, params, name, step, floor));
  }
  return worst;
}

}  // namespace objreason
