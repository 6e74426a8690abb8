#pragma once

#include <cmath>
#include <memory>
#include <vector>

#include "objreason/numerics/ops.hpp"

namespace objreason {

/// One independent attention problem inside a row-stacked batch.
struct AttentionBlock {
  Eigen::Index start = 0;
  Eigen::Index length = 0;
  /// length x length; row index into the relative-embedding table for each
  /// (query, key) pair.
  IndexMatrix offsets;
  /// length x length; false entries get zero weight. Empty means unrestricted.
  BoolMatrix allowed;
};

/// Attention weights captured during a forward pass, [block][head].
template <typename Scalar>
using AttentionWeights = std::vector<std::vector<Matrix<Scalar>>>;

/// Multi-head self-attention with relative-position logits.
///
/// For each block and head h with width dh = D / heads,
///   logit(i, j) = ((q_i + u_h) . k_j + (q_i + w_h) . r_h[offsets(i, j)]) / sqrt(dh)
/// where r is the projected relative table (P x D), u the content bias and w
/// the position bias (both 1 x D). Rows of different blocks never interact.
/// Returns the row-stacked head outputs, same shape as `q`.
template <typename Scalar>
Var<Scalar> relative_attention(Var<Scalar> q, Var<Scalar> k, Var<Scalar> v, Var<Scalar> rel,
                               Var<Scalar> content_bias, Var<Scalar> position_bias, int heads,
                               std::vector<AttentionBlock> blocks,
                               AttentionWeights<Scalar>* weights_out = nullptr) {
  auto& g = *q.graph;
  const Eigen::Index D = q.cols();
  detail::require(heads > 0 && D % heads == 0, "relative_attention", g, "width not divisible by heads");
  detail::require(k.rows() == q.rows() && v.rows() == q.rows() && k.cols() == D && v.cols() == D,
                  "relative_attention", g, "q/k/v shape mismatch");
  detail::require(rel.cols() == D && content_bias.cols() == D && position_bias.cols() == D &&
                      content_bias.rows() == 1 && position_bias.rows() == 1,
                  "relative_attention", g, "relative table or bias width mismatch");
  const Eigen::Index dh = D / heads;
  const Scalar scale = Scalar(1) / std::sqrt(Scalar(dh));
  const auto& Q = q.value();
  const auto& K = k.value();
  const auto& V = v.value();
  const auto& R = rel.value();
  const auto& U = content_bias.value();
  const auto& W = position_bias.value();

  auto probs = std::make_shared<AttentionWeights<Scalar>>();
  probs->resize(blocks.size());
  Matrix<Scalar> out = Matrix<Scalar>::Zero(Q.rows(), D);
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    const auto& blk = blocks[b];
    const Eigen::Index s = blk.start, L = blk.length;
    detail::require(s >= 0 && s + L <= Q.rows() && blk.offsets.rows() == L && blk.offsets.cols() == L,
                    "relative_attention", g, "block layout out of range");
    detail::require(blk.offsets.size() == 0 ||
                        (blk.offsets.minCoeff() >= 0 && blk.offsets.maxCoeff() < R.rows()),
                    "relative_attention", g, "relative offset index out of table");
    const BoolMatrix* mask = blk.allowed.size() ? &blk.allowed : nullptr;
    (*probs)[b].resize(static_cast<std::size_t>(heads));
    for (int h = 0; h < heads; ++h) {
      const Eigen::Index c0 = h * dh;
      Matrix<Scalar> qu = Q.block(s, c0, L, dh).rowwise() + U.block(0, c0, 1, dh).row(0);
      Matrix<Scalar> qw = Q.block(s, c0, L, dh).rowwise() + W.block(0, c0, 1, dh).row(0);
      Matrix<Scalar> logits;
      logits.noalias() = qu * K.block(s, c0, L, dh).transpose();
      Matrix<Scalar> br;
      br.noalias() = qw * R.middleCols(c0, dh).transpose();
      for (Eigen::Index i = 0; i < L; ++i) {
        for (Eigen::Index j = 0; j < L; ++j) logits(i, j) += br(i, blk.offsets(i, j));
      }
      logits *= scale;
      Matrix<Scalar> a = detail::masked_softmax(logits, mask);
      out.block(s, c0, L, dh).noalias() = a * V.block(s, c0, L, dh);
      (*probs)[b][static_cast<std::size_t>(h)] = std::move(a);
    }
  }
  if (weights_out) *weights_out = *probs;

  const int iq = q.id, ik = k.id, iv = v.id, ir = rel.id, iu = content_bias.id, iw = position_bias.id;
  return g.push(
      "relative_attention", std::move(out), {iq, ik, iv, ir, iu, iw},
      [=, blocks = std::move(blocks)](Graph<Scalar>& g, int self) {
        const auto& G = g.grad(self);
        const auto& Q = g.value(iq);
        const auto& K = g.value(ik);
        const auto& V = g.value(iv);
        const auto& R = g.value(ir);
        const auto& U = g.value(iu);
        const auto& W = g.value(iw);
        Matrix<Scalar> dQ = Matrix<Scalar>::Zero(Q.rows(), D);
        Matrix<Scalar> dK = Matrix<Scalar>::Zero(K.rows(), D);
        Matrix<Scalar> dV = Matrix<Scalar>::Zero(V.rows(), D);
        Matrix<Scalar> dR = Matrix<Scalar>::Zero(R.rows(), D);
        Matrix<Scalar> dU = Matrix<Scalar>::Zero(1, D);
        Matrix<Scalar> dW = Matrix<Scalar>::Zero(1, D);
        for (std::size_t b = 0; b < blocks.size(); ++b) {
          const auto& blk = blocks[b];
          const Eigen::Index s = blk.start, L = blk.length;
          for (int h = 0; h < heads; ++h) {
            const Eigen::Index c0 = h * dh;
            const auto& a = (*probs)[b][static_cast<std::size_t>(h)];
            const auto dO = G.block(s, c0, L, dh);
            Matrix<Scalar> dA;
            dA.noalias() = dO * V.block(s, c0, L, dh).transpose();
            dV.block(s, c0, L, dh).noalias() += a.transpose() * dO;
            Eigen::Matrix<Scalar, Eigen::Dynamic, 1> rowdot = dA.cwiseProduct(a).rowwise().sum();
            Matrix<Scalar> dL = (a.array() * (dA.colwise() - rowdot).array()) * scale;
            Matrix<Scalar> qu = Q.block(s, c0, L, dh).rowwise() + U.block(0, c0, 1, dh).row(0);
            Matrix<Scalar> qw = Q.block(s, c0, L, dh).rowwise() + W.block(0, c0, 1, dh).row(0);
            Matrix<Scalar> dqu;
            dqu.noalias() = dL * K.block(s, c0, L, dh);
            dK.block(s, c0, L, dh).noalias() += dL.transpose() * qu;
            Matrix<Scalar> dbr = Matrix<Scalar>::Zero(L, R.rows());
            for (Eigen::Index i = 0; i < L; ++i) {
              for (Eigen::Index j = 0; j < L; ++j) dbr(i, blk.offsets(i, j)) += dL(i, j);
            }
            Matrix<Scalar> dqw;
            dqw.noalias() = dbr * R.middleCols(c0, dh);
            dR.middleCols(c0, dh).noalias() += dbr.transpose() * qw;
            dQ.block(s, c0, L, dh) += dqu + dqw;
            dU.block(0, c0, 1, dh) += dqu.colwise().sum();
            dW.block(0, c0, 1, dh) += dqw.colwise().sum();
          }
        }
        g.accumulate(iq, dQ);
        g.accumulate(ik, dK);
        g.accumulate(iv, dV);
        g.accumulate(ir, dR);
        g.accumulate(iu, dU);
        g.accumulate(iw, dW);
      });
}

}  // namespace objreason
