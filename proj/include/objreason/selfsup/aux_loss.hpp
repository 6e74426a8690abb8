#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "objreason/numerics.hpp"
#include "objreason/selfsup/mask.hpp"
#include "objreason/util/kv_config.hpp"

namespace objreason {

enum class AuxLossKind { L2, Contrastive };
enum class Negatives { AllFrames, SameFrame };
enum class Similarity { Dot, Cosine };

std::string to_string(AuxLossKind k);
std::string to_string(Negatives n);
std::string to_string(Similarity s);

struct AuxLossConfig {
  AuxLossKind kind = AuxLossKind::L2;
  Negatives negatives = Negatives::AllFrames;
  double temperature = 1.0;
  Similarity similarity = Similarity::Dot;
  double weight = 0.0;  // lambda

  static AuxLossConfig from(const KeyValueConfig& cfg);  // keys under "aux."
  void validate() const;
};

template <typename Scalar>
struct AuxLoss {
  Var<Scalar> value;  // 1 x 1
  int targets = 0;
  bool empty = false;  // no targets: value is a constant zero
};

namespace detail {

template <typename Scalar>
void check_aux_inputs(Var<Scalar> predicted, Var<Scalar> truth, const std::vector<MaskPlan>& plans) {
  Eigen::Index rows = 0;
  for (const auto& p : plans) rows += static_cast<Eigen::Index>(p.frames) * p.slots;
  if (predicted.rows() != rows || truth.rows() != rows) {
    throw ShapeError("aux_loss", predicted.id, "slot rows do not match the mask plans");
  }
}

template <typename Scalar>
Var<Scalar> aux_map(Graph<Scalar>& g, const ParamStore<Scalar>& p, Var<Scalar> x) {
  return linear(x, g.param(p, "aux.weight"), g.param(p, "aux.bias"));
}

}  // namespace detail

/// Mean over target slots of |f(predicted) - truth|^2, where f is the
/// learned affine map "aux" from model width to slot width. Rows of both
/// inputs are stacked sequence by sequence, one plan per sequence. Truth
/// rows never receive gradient.
template <typename Scalar>
AuxLoss<Scalar> aux_loss_l2(Graph<Scalar>& g, const ParamStore<Scalar>& p, Var<Scalar> predicted, Var<Scalar> truth,
                            const std::vector<MaskPlan>& plans) {
  detail::check_aux_inputs(predicted, truth, plans);
  std::vector<int> rows;
  int offset = 0;
  for (const auto& plan : plans) {
    for (int r : plan.target_rows()) rows.push_back(offset + r);
    offset += plan.frames * plan.slots;
  }
  AuxLoss<Scalar> out;
  out.targets = static_cast<int>(rows.size());
  if (rows.empty()) {
    out.value = g.constant(Matrix<Scalar>::Zero(1, 1));
    out.empty = true;
    return out;
  }
  auto diff = sub(detail::aux_map(g, p, gather_rows(predicted, rows)), gather_rows(stop_gradient(truth), rows));
  out.value = scale(sum_all(square(diff)), Scalar(1) / static_cast<Scalar>(rows.size()));
  return out;
}

/// Mean over target slots of the cross-entropy of picking the true slot
/// vector among the candidates: every slot of the same sequence, or only
/// the slots of the target's frame. Scores are dot products or cosine
/// similarities divided by the temperature.
template <typename Scalar>
AuxLoss<Scalar> aux_loss_contrastive(Graph<Scalar>& g, const ParamStore<Scalar>& p, Var<Scalar> predicted,
                                     Var<Scalar> truth, const std::vector<MaskPlan>& plans,
                                     const AuxLossConfig& cfg) {
  cfg.validate();
  detail::check_aux_inputs(predicted, truth, plans);
  AuxLoss<Scalar> out;
  std::vector<Var<Scalar>> parts;
  int offset = 0;
  auto fixed = stop_gradient(truth);
  for (const auto& plan : plans) {
    const int n = plan.frames * plan.slots;
    const auto rows = plan.target_rows();
    if (!rows.empty()) {
      std::vector<int> global(rows);
      for (int& r : global) r += offset;
      auto query = detail::aux_map(g, p, gather_rows(predicted, global));
      auto cand = slice_rows(fixed, offset, n);
      if (cfg.similarity == Similarity::Cosine) {
        query = l2_normalize_rows(query);
        cand = l2_normalize_rows(cand);
      }
      auto logits = scale(matmul(query, transpose(cand)), static_cast<Scalar>(1.0 / cfg.temperature));
      BoolMatrix allowed;
      if (cfg.negatives == Negatives::SameFrame) {
        allowed = BoolMatrix::Constant(static_cast<Eigen::Index>(rows.size()), n, false);
        for (std::size_t k = 0; k < rows.size(); ++k) {
          const int t = rows[k] / plan.slots;
          for (int j = 0; j < plan.slots; ++j) allowed(static_cast<Eigen::Index>(k), t * plan.slots + j) = true;
        }
      }
      parts.push_back(cross_entropy_rows(logits, rows, allowed.size() ? &allowed : nullptr));
      out.targets += static_cast<int>(rows.size());
    }
    offset += n;
  }
  if (parts.empty()) {
    out.value = g.constant(Matrix<Scalar>::Zero(1, 1));
    out.empty = true;
    return out;
  }
  out.value = scale(sum_all(concat_rows(parts)), Scalar(1) / static_cast<Scalar>(out.targets));
  return out;
}

template <typename Scalar>
AuxLoss<Scalar> aux_loss(Graph<Scalar>& g, const ParamStore<Scalar>& p, Var<Scalar> predicted, Var<Scalar> truth,
                         const std::vector<MaskPlan>& plans, const AuxLossConfig& cfg) {
  if (cfg.kind == AuxLossKind::L2) return aux_loss_l2(g, p, predicted, truth, plans);
  return aux_loss_contrastive(g, p, predicted, truth, plans, cfg);
}

/// task + weight * aux. A zero weight returns the task loss node itself, so
/// the auxiliary graph is never reached by backpropagation.
template <typename Scalar>
Var<Scalar> combine_losses(Var<Scalar> task, Var<Scalar> aux, double weight) {
  if (weight < 0) throw ConfigError("combine_losses: negative auxiliary weight");
  if (weight == 0.0) return task;
  return add(task, scale(aux, static_cast<Scalar>(weight)));
}

}  // namespace objreason
