#pragma once

#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "objreason/numerics/graph.hpp"

namespace objreason {

namespace detail {

inline std::string dims(Eigen::Index r, Eigen::Index c) {
  return std::to_string(r) + "x" + std::to_string(c);
}

template <typename Scalar>
void require(bool ok, const char* op, const Graph<Scalar>& g, const std::string& msg) {
  if (!ok) throw ShapeError(op, static_cast<int>(g.size()), msg);
}

template <typename Scalar>
Graph<Scalar>& graph_of(Var<Scalar> a, Var<Scalar> b, const char* op) {
  if (a.graph != b.graph || a.graph == nullptr) {
    throw ShapeError(op, -1, "operands belong to different graphs");
  }
  return *a.graph;
}

template <typename Scalar>
void require_same_shape(Var<Scalar> a, Var<Scalar> b, const char* op) {
  require(a.rows() == b.rows() && a.cols() == b.cols(), op, *a.graph,
          dims(a.rows(), a.cols()) + " vs " + dims(b.rows(), b.cols()));
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Linear algebra and elementwise arithmetic

template <typename Scalar>
Var<Scalar> matmul(Var<Scalar> a, Var<Scalar> b) {
  auto& g = detail::graph_of(a, b, "matmul");
  detail::require(a.cols() == b.rows(), "matmul", g,
                  detail::dims(a.rows(), a.cols()) + " * " + detail::dims(b.rows(), b.cols()));
  Matrix<Scalar> v;
  v.noalias() = a.value() * b.value();
  const int ia = a.id, ib = b.id;
  return g.push("matmul", std::move(v), {ia, ib}, [ia, ib](Graph<Scalar>& g, int self) {
    const auto& G = g.grad(self);
    if (g.requires_grad(ia)) g.grad(ia).noalias() += G * g.value(ib).transpose();
    if (g.requires_grad(ib)) g.grad(ib).noalias() += g.value(ia).transpose() * G;
  });
}

template <typename Scalar>
Var<Scalar> transpose(Var<Scalar> a) {
  auto& g = *a.graph;
  const int ia = a.id;
  Matrix<Scalar> v = a.value().transpose();
  return g.push("transpose", std::move(v), {ia}, [ia](Graph<Scalar>& g, int self) {
    g.accumulate(ia, g.grad(self).transpose());
  });
}

template <typename Scalar>
Var<Scalar> add(Var<Scalar> a, Var<Scalar> b) {
  auto& g = detail::graph_of(a, b, "add");
  detail::require_same_shape(a, b, "add");
  const int ia = a.id, ib = b.id;
  Matrix<Scalar> v = a.value() + b.value();
  return g.push("add", std::move(v), {ia, ib}, [ia, ib](Graph<Scalar>& g, int self) {
    g.accumulate(ia, g.grad(self));
    g.accumulate(ib, g.grad(self));
  });
}

template <typename Scalar>
Var<Scalar> sub(Var<Scalar> a, Var<Scalar> b) {
  auto& g = detail::graph_of(a, b, "sub");
  detail::require_same_shape(a, b, "sub");
  const int ia = a.id, ib = b.id;
  Matrix<Scalar> v = a.value() - b.value();
  return g.push("sub", std::move(v), {ia, ib}, [ia, ib](Graph<Scalar>& g, int self) {
    g.accumulate(ia, g.grad(self));
    g.accumulate(ib, -g.grad(self));
  });
}

template <typename Scalar>
Var<Scalar> cmul(Var<Scalar> a, Var<Scalar> b) {
  auto& g = detail::graph_of(a, b, "cmul");
  detail::require_same_shape(a, b, "cmul");
  const int ia = a.id, ib = b.id;
  Matrix<Scalar> v = a.value().cwiseProduct(b.value());
  return g.push("cmul", std::move(v), {ia, ib}, [ia, ib](Graph<Scalar>& g, int self) {
    const auto& G = g.grad(self);
    if (g.requires_grad(ia)) g.grad(ia) += G.cwiseProduct(g.value(ib));
    if (g.requires_grad(ib)) g.grad(ib) += G.cwiseProduct(g.value(ia));
  });
}

template <typename Scalar>
Var<Scalar> operator+(Var<Scalar> a, Var<Scalar> b) { return add(a, b); }
template <typename Scalar>
Var<Scalar> operator-(Var<Scalar> a, Var<Scalar> b) { return sub(a, b); }

template <typename Scalar>
Var<Scalar> scale(Var<Scalar> a, Scalar s) {
  auto& g = *a.graph;
  const int ia = a.id;
  Matrix<Scalar> v = a.value() * s;
  return g.push("scale", std::move(v), {ia}, [ia, s](Graph<Scalar>& g, int self) {
    g.accumulate(ia, g.grad(self) * s);
  });
}

template <typename Scalar>
Var<Scalar> operator*(Var<Scalar> a, Scalar s) { return scale(a, s); }

/// Adds a 1 x C row to every row of `a`.
template <typename Scalar>
Var<Scalar> add_row(Var<Scalar> a, Var<Scalar> row) {
  auto& g = detail::graph_of(a, row, "add_row");
  detail::require(row.rows() == 1 && row.cols() == a.cols(), "add_row", g,
                  detail::dims(a.rows(), a.cols()) + " + row " + detail::dims(row.rows(), row.cols()));
  const int ia = a.id, ir = row.id;
  Matrix<Scalar> v = a.value().rowwise() + row.value().row(0);
  return g.push("add_row", std::move(v), {ia, ir}, [ia, ir](Graph<Scalar>& g, int self) {
    const auto& G = g.grad(self);
    g.accumulate(ia, G);
    if (g.requires_grad(ir)) g.grad(ir) += G.colwise().sum();
  });
}

/// Multiplies every row of `a` elementwise by a 1 x C row.
template <typename Scalar>
Var<Scalar> mul_row(Var<Scalar> a, Var<Scalar> row) {
  auto& g = detail::graph_of(a, row, "mul_row");
  detail::require(row.rows() == 1 && row.cols() == a.cols(), "mul_row", g,
                  detail::dims(a.rows(), a.cols()) + " * row " + detail::dims(row.rows(), row.cols()));
  const int ia = a.id, ir = row.id;
  Matrix<Scalar> v = a.value().array().rowwise() * row.value().row(0).array();
  return g.push("mul_row", std::move(v), {ia, ir}, [ia, ir](Graph<Scalar>& g, int self) {
    const auto& G = g.grad(self);
    if (g.requires_grad(ia)) {
      g.grad(ia).array() += G.array().rowwise() * g.value(ir).row(0).array();
    }
    if (g.requires_grad(ir)) g.grad(ir) += G.cwiseProduct(g.value(ia)).colwise().sum();
  });
}

/// Affine map x W + b with W: in x out, b: 1 x out.
template <typename Scalar>
Var<Scalar> linear(Var<Scalar> x, Var<Scalar> weight, Var<Scalar> bias) {
  return add_row(matmul(x, weight), bias);
}

// ---------------------------------------------------------------------------
// Activations

template <typename Scalar>
Var<Scalar> relu(Var<Scalar> a) {
  auto& g = *a.graph;
  const int ia = a.id;
  Matrix<Scalar> v = a.value().cwiseMax(Scalar(0));
  return g.push("relu", std::move(v), {ia}, [ia](Graph<Scalar>& g, int self) {
    if (!g.requires_grad(ia)) return;
    g.grad(ia).array() +=
        (g.value(ia).array() > Scalar(0)).template cast<Scalar>() * g.grad(self).array();
  });
}

/// Exact (erf-based) GELU.
template <typename Scalar>
Var<Scalar> gelu(Var<Scalar> a) {
  auto& g = *a.graph;
  const int ia = a.id;
  const Scalar inv_sqrt2 = Scalar(1.0 / std::sqrt(2.0));
  Matrix<Scalar> v = a.value().unaryExpr([inv_sqrt2](Scalar x) {
    return Scalar(0.5) * x * (Scalar(1) + std::erf(x * inv_sqrt2));
  });
  return g.push("gelu", std::move(v), {ia}, [ia, inv_sqrt2](Graph<Scalar>& g, int self) {
    if (!g.requires_grad(ia)) return;
    const Scalar inv_sqrt2pi = Scalar(1.0 / std::sqrt(2.0 * std::numbers::pi));
    Matrix<Scalar> d = g.value(ia).unaryExpr([&](Scalar x) {
      return Scalar(0.5) * (Scalar(1) + std::erf(x * inv_sqrt2)) +
             x * inv_sqrt2pi * std::exp(Scalar(-0.5) * x * x);
    });
    g.grad(ia) += d.cwiseProduct(g.grad(self));
  });
}

template <typename Scalar>
Var<Scalar> sigmoid(Var<Scalar> a) {
  auto& g = *a.graph;
  const int ia = a.id;
  Matrix<Scalar> v = a.value().unaryExpr([](Scalar x) {
    return x >= 0 ? Scalar(1) / (Scalar(1) + std::exp(-x))
                  : std::exp(x) / (Scalar(1) + std::exp(x));
  });
  return g.push("sigmoid", std::move(v), {ia}, [ia](Graph<Scalar>& g, int self) {
    if (!g.requires_grad(ia)) return;
    const auto& y = g.value(self);
    g.grad(ia).array() += g.grad(self).array() * y.array() * (Scalar(1) - y.array());
  });
}

template <typename Scalar>
Var<Scalar> square(Var<Scalar> a) {
  auto& g = *a.graph;
  const int ia = a.id;
  Matrix<Scalar> v = a.value().cwiseAbs2();
  return g.push("square", std::move(v), {ia}, [ia](Graph<Scalar>& g, int self) {
    if (!g.requires_grad(ia)) return;
    g.grad(ia) += Scalar(2) * g.value(ia).cwiseProduct(g.grad(self));
  });
}

// ---------------------------------------------------------------------------
// Row-wise normalisations. Softmax subtracts the row maximum; entries masked
// out (mask false) receive probability exactly zero.

namespace detail {

template <typename Scalar>
Matrix<Scalar> masked_softmax(const Matrix<Scalar>& x, const BoolMatrix* mask) {
  Matrix<Scalar> y(x.rows(), x.cols());
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    Scalar mx = -std::numeric_limits<Scalar>::infinity();
    for (Eigen::Index c = 0; c < x.cols(); ++c) {
      if (!mask || (*mask)(r, c)) mx = std::max(mx, x(r, c));
    }
    if (!std::isfinite(mx)) throw NumericError("softmax: row " + std::to_string(r) + " fully masked");
    Scalar total = 0;
    for (Eigen::Index c = 0; c < x.cols(); ++c) {
      const Scalar e = (!mask || (*mask)(r, c)) ? std::exp(x(r, c) - mx) : Scalar(0);
      y(r, c) = e;
      total += e;
    }
    y.row(r) /= total;
  }
  return y;
}

}  // namespace detail

template <typename Scalar>
Var<Scalar> softmax_rows(Var<Scalar> a, const BoolMatrix* mask = nullptr) {
  auto& g = *a.graph;
  if (mask) {
    detail::require(mask->rows() == a.rows() && mask->cols() == a.cols(), "softmax_rows", g,
                    "mask shape mismatch");
  }
  const int ia = a.id;
  Matrix<Scalar> v = detail::masked_softmax(a.value(), mask);
  return g.push("softmax_rows", std::move(v), {ia}, [ia](Graph<Scalar>& g, int self) {
    if (!g.requires_grad(ia)) return;
    const auto& y = g.value(self);
    const auto& G = g.grad(self);
    Eigen::Matrix<Scalar, Eigen::Dynamic, 1> dot = G.cwiseProduct(y).rowwise().sum();
    g.grad(ia).array() += y.array() * (G.colwise() - dot).array();
  });
}

/// Per-row negative log-likelihood of `labels` under softmax(logits),
/// computed with log-sum-exp. Returns R x 1.
template <typename Scalar>
Var<Scalar> cross_entropy_rows(Var<Scalar> logits, std::vector<int> labels,
                               const BoolMatrix* mask = nullptr) {
  auto& g = *logits.graph;
  detail::require(static_cast<Eigen::Index>(labels.size()) == logits.rows(), "cross_entropy_rows",
                  g, "label count differs from row count");
  if (mask) {
    detail::require(mask->rows() == logits.rows() && mask->cols() == logits.cols(),
                    "cross_entropy_rows", g, "mask shape mismatch");
  }
  const auto& x = logits.value();
  Matrix<Scalar> p = detail::masked_softmax(x, mask);
  Matrix<Scalar> v(x.rows(), 1);
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    const int lab = labels[static_cast<std::size_t>(r)];
    detail::require(lab >= 0 && lab < x.cols() && (!mask || (*mask)(r, lab)), "cross_entropy_rows",
                    g, "label out of range");
    Scalar mx = -std::numeric_limits<Scalar>::infinity();
    for (Eigen::Index c = 0; c < x.cols(); ++c) {
      if (!mask || (*mask)(r, c)) mx = std::max(mx, x(r, c));
    }
    Scalar total = 0;
    for (Eigen::Index c = 0; c < x.cols(); ++c) {
      if (!mask || (*mask)(r, c)) total += std::exp(x(r, c) - mx);
    }
    v(r, 0) = mx + std::log(total) - x(r, lab);
  }
  const int il = logits.id;
  return g.push("cross_entropy_rows", std::move(v), {il},
                [il, p = std::move(p), labels = std::move(labels)](Graph<Scalar>& g, int self) {
                  if (!g.requires_grad(il)) return;
                  const auto& G = g.grad(self);
                  Matrix<Scalar> d = p;
                  for (Eigen::Index r = 0; r < d.rows(); ++r) {
                    d(r, labels[static_cast<std::size_t>(r)]) -= Scalar(1);
                    d.row(r) *= G(r, 0);
                  }
                  g.grad(il) += d;
                });
}

/// Per-row binary cross-entropy of sigmoid(logits) against targets in [0,1].
template <typename Scalar>
Var<Scalar> bce_with_logits(Var<Scalar> logits, std::vector<Scalar> targets) {
  auto& g = *logits.graph;
  detail::require(logits.cols() == 1 && static_cast<Eigen::Index>(targets.size()) == logits.rows(),
                  "bce_with_logits", g, "expects R x 1 logits and R targets");
  const auto& x = logits.value();
  Matrix<Scalar> v(x.rows(), 1);
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    const Scalar z = x(r, 0), t = targets[static_cast<std::size_t>(r)];
    v(r, 0) = std::max(z, Scalar(0)) - z * t + std::log1p(std::exp(-std::abs(z)));
  }
  const int il = logits.id;
  return g.push("bce_with_logits", std::move(v), {il},
                [il, targets = std::move(targets)](Graph<Scalar>& g, int self) {
                  if (!g.requires_grad(il)) return;
                  const auto& x = g.value(il);
                  const auto& G = g.grad(self);
                  auto& dx = g.grad(il);
                  for (Eigen::Index r = 0; r < x.rows(); ++r) {
                    const Scalar z = x(r, 0);
                    const Scalar s = z >= 0 ? Scalar(1) / (Scalar(1) + std::exp(-z))
                                            : std::exp(z) / (Scalar(1) + std::exp(z));
                    dx(r, 0) += G(r, 0) * (s - targets[static_cast<std::size_t>(r)]);
                  }
                });
}

/// Normalises each row to zero mean and unit variance (no affine part).
template <typename Scalar>
Var<Scalar> layer_norm_rows(Var<Scalar> a, Scalar eps = Scalar(1e-5)) {
  auto& g = *a.graph;
  const auto& x = a.value();
  const Eigen::Index n = x.cols();
  Matrix<Scalar> y(x.rows(), n);
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> inv_std(x.rows());
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    const Scalar mean = x.row(r).mean();
    const Scalar var = (x.row(r).array() - mean).square().mean();
    inv_std(r) = Scalar(1) / std::sqrt(var + eps);
    y.row(r) = (x.row(r).array() - mean) * inv_std(r);
  }
  const int ia = a.id;
  return g.push("layer_norm_rows", std::move(y), {ia},
                [ia, inv_std = std::move(inv_std)](Graph<Scalar>& g, int self) {
                  if (!g.requires_grad(ia)) return;
                  const auto& y = g.value(self);
                  const auto& G = g.grad(self);
                  auto& dx = g.grad(ia);
                  for (Eigen::Index r = 0; r < y.rows(); ++r) {
                    const Scalar mg = G.row(r).mean();
                    const Scalar mgy = G.row(r).dot(y.row(r)) / Scalar(y.cols());
                    dx.row(r).array() +=
                        inv_std(r) * (G.row(r).array() - mg - y.row(r).array() * mgy);
                  }
                });
}

/// Scales each row to unit L2 norm; rows with norm below `eps` are divided
/// by `eps` instead.
template <typename Scalar>
Var<Scalar> l2_normalize_rows(Var<Scalar> a, Scalar eps = Scalar(1e-8)) {
  auto& g = *a.graph;
  const auto& x = a.value();
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> norm(x.rows());
  Matrix<Scalar> y(x.rows(), x.cols());
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    norm(r) = std::max(x.row(r).norm(), eps);
    y.row(r) = x.row(r) / norm(r);
  }
  const int ia = a.id;
  return g.push("l2_normalize_rows", std::move(y), {ia},
                [ia, eps, norm = std::move(norm)](Graph<Scalar>& g, int self) {
                  if (!g.requires_grad(ia)) return;
                  const auto& y = g.value(self);
                  const auto& G = g.grad(self);
                  auto& dx = g.grad(ia);
                  for (Eigen::Index r = 0; r < y.rows(); ++r) {
                    if (norm(r) <= eps) {
                      dx.row(r) += G.row(r) / norm(r);
                    } else {
                      dx.row(r) += (G.row(r) - y.row(r) * G.row(r).dot(y.row(r))) / norm(r);
                    }
                  }
                });
}

// ---------------------------------------------------------------------------
// Reductions

template <typename Scalar>
Var<Scalar> sum_all(Var<Scalar> a) {
  auto& g = *a.graph;
  const int ia = a.id;
  Matrix<Scalar> v(1, 1);
  v(0, 0) = a.value().sum();
  return g.push("sum_all", std::move(v), {ia}, [ia](Graph<Scalar>& g, int self) {
    if (!g.requires_grad(ia)) return;
    g.grad(ia).array() += g.grad(self)(0, 0);
  });
}

template <typename Scalar>
Var<Scalar> mean_all(Var<Scalar> a) {
  const Eigen::Index n = a.value().size();
  return scale(sum_all(a), Scalar(1) / Scalar(n));
}

/// Row sums, R x 1.
template <typename Scalar>
Var<Scalar> sum_rows(Var<Scalar> a) {
  auto& g = *a.graph;
  const int ia = a.id;
  Matrix<Scalar> v = a.value().rowwise().sum();
  return g.push("sum_rows", std::move(v), {ia}, [ia](Graph<Scalar>& g, int self) {
    if (!g.requires_grad(ia)) return;
    g.grad(ia).colwise() += g.grad(self).col(0);
  });
}

/// Averages consecutive groups of `group` rows: (R*group) x C -> R x C.
template <typename Scalar>
Var<Scalar> group_mean_rows(Var<Scalar> a, Eigen::Index group) {
  auto& g = *a.graph;
  detail::require(group > 0 && a.rows() % group == 0, "group_mean_rows", g,
                  "row count not divisible by group");
  const Eigen::Index out_rows = a.rows() / group;
  Matrix<Scalar> v(out_rows, a.cols());
  for (Eigen::Index r = 0; r < out_rows; ++r) {
    v.row(r) = a.value().middleRows(r * group, group).colwise().mean();
  }
  const int ia = a.id;
  return g.push("group_mean_rows", std::move(v), {ia}, [ia, group](Graph<Scalar>& g, int self) {
    if (!g.requires_grad(ia)) return;
    const auto& G = g.grad(self);
    auto& dx = g.grad(ia);
    for (Eigen::Index r = 0; r < G.rows(); ++r) {
      dx.middleRows(r * group, group).rowwise() += G.row(r) / Scalar(group);
    }
  });
}

// ---------------------------------------------------------------------------
// Structural ops

template <typename Scalar>
Var<Scalar> concat_rows(const std::vector<Var<Scalar>>& parts) {
  if (parts.empty()) throw ShapeError("concat_rows", -1, "no inputs");
  auto& g = *parts.front().graph;
  const Eigen::Index cols = parts.front().cols();
  Eigen::Index rows = 0;
  std::vector<int> ids;
  std::vector<Eigen::Index> offsets;
  for (const auto& p : parts) {
    detail::require(p.graph == &g && p.cols() == cols, "concat_rows", g, "column mismatch");
    offsets.push_back(rows);
    rows += p.rows();
    ids.push_back(p.id);
  }
  Matrix<Scalar> v(rows, cols);
  for (std::size_t k = 0; k < parts.size(); ++k) {
    v.middleRows(offsets[k], parts[k].rows()) = parts[k].value();
  }
  auto inputs = ids;
  return g.push("concat_rows", std::move(v), std::move(inputs),
                [ids, offsets](Graph<Scalar>& g, int self) {
                  const auto& G = g.grad(self);
                  for (std::size_t k = 0; k < ids.size(); ++k) {
                    if (!g.requires_grad(ids[k])) continue;
                    g.grad(ids[k]) += G.middleRows(offsets[k], g.value(ids[k]).rows());
                  }
                });
}

template <typename Scalar>
Var<Scalar> concat_cols(const std::vector<Var<Scalar>>& parts) {
  if (parts.empty()) throw ShapeError("concat_cols", -1, "no inputs");
  auto& g = *parts.front().graph;
  const Eigen::Index rows = parts.front().rows();
  Eigen::Index cols = 0;
  std::vector<int> ids;
  std::vector<Eigen::Index> offsets;
  for (const auto& p : parts) {
    detail::require(p.graph == &g && p.rows() == rows, "concat_cols", g, "row mismatch");
    offsets.push_back(cols);
    cols += p.cols();
    ids.push_back(p.id);
  }
  Matrix<Scalar> v(rows, cols);
  for (std::size_t k = 0; k < parts.size(); ++k) {
    v.middleCols(offsets[k], parts[k].cols()) = parts[k].value();
  }
  auto inputs = ids;
  return g.push("concat_cols", std::move(v), std::move(inputs),
                [ids, offsets](Graph<Scalar>& g, int self) {
                  const auto& G = g.grad(self);
                  for (std::size_t k = 0; k < ids.size(); ++k) {
                    if (!g.requires_grad(ids[k])) continue;
                    g.grad(ids[k]) += G.middleCols(offsets[k], g.value(ids[k]).cols());
                  }
                });
}

template <typename Scalar>
Var<Scalar> slice_rows(Var<Scalar> a, Eigen::Index start, Eigen::Index count) {
  auto& g = *a.graph;
  detail::require(start >= 0 && count >= 0 && start + count <= a.rows(), "slice_rows", g,
                  "range out of bounds");
  const int ia = a.id;
  Matrix<Scalar> v = a.value().middleRows(start, count);
  return g.push("slice_rows", std::move(v), {ia}, [ia, start, count](Graph<Scalar>& g, int self) {
    if (!g.requires_grad(ia)) return;
    g.grad(ia).middleRows(start, count) += g.grad(self);
  });
}

template <typename Scalar>
Var<Scalar> slice_cols(Var<Scalar> a, Eigen::Index start, Eigen::Index count) {
  auto& g = *a.graph;
  detail::require(start >= 0 && count >= 0 && start + count <= a.cols(), "slice_cols", g,
                  "range out of bounds");
  const int ia = a.id;
  Matrix<Scalar> v = a.value().middleCols(start, count);
  return g.push("slice_cols", std::move(v), {ia}, [ia, start, count](Graph<Scalar>& g, int self) {
    if (!g.requires_grad(ia)) return;
    g.grad(ia).middleCols(start, count) += g.grad(self);
  });
}

/// Selects rows by index; index -1 yields a zero row.
template <typename Scalar>
Var<Scalar> gather_rows(Var<Scalar> a, std::vector<int> index) {
  auto& g = *a.graph;
  Matrix<Scalar> v(static_cast<Eigen::Index>(index.size()), a.cols());
  for (std::size_t r = 0; r < index.size(); ++r) {
    const int src = index[r];
    detail::require(src >= -1 && src < a.rows(), "gather_rows", g, "index out of range");
    if (src < 0) {
      v.row(static_cast<Eigen::Index>(r)).setZero();
    } else {
      v.row(static_cast<Eigen::Index>(r)) = a.value().row(src);
    }
  }
  const int ia = a.id;
  return g.push("gather_rows", std::move(v), {ia},
                [ia, index = std::move(index)](Graph<Scalar>& g, int self) {
                  if (!g.requires_grad(ia)) return;
                  const auto& G = g.grad(self);
                  auto& dx = g.grad(ia);
                  for (std::size_t r = 0; r < index.size(); ++r) {
                    if (index[r] >= 0) dx.row(index[r]) += G.row(static_cast<Eigen::Index>(r));
                  }
                });
}

/// Patch extraction for convolution as matrix product. `table(r, k)` names
/// the source row for output row r and kernel tap k (-1 for padding); the
/// output row is the concatenation of the C-wide source rows over k.
template <typename Scalar>
Var<Scalar> patch_gather(Var<Scalar> a, const IndexMatrix& table) {
  auto& g = *a.graph;
  const Eigen::Index C = a.cols();
  const Eigen::Index K = table.cols();
  Matrix<Scalar> v = Matrix<Scalar>::Zero(table.rows(), K * C);
  for (Eigen::Index r = 0; r < table.rows(); ++r) {
    for (Eigen::Index k = 0; k < K; ++k) {
      const int src = table(r, k);
      detail::require(src >= -1 && src < a.rows(), "patch_gather", g, "index out of range");
      if (src >= 0) v.block(r, k * C, 1, C) = a.value().row(src);
    }
  }
  const int ia = a.id;
  return g.push("patch_gather", std::move(v), {ia}, [ia, table, C](Graph<Scalar>& g, int self) {
    if (!g.requires_grad(ia)) return;
    const auto& G = g.grad(self);
    auto& dx = g.grad(ia);
    for (Eigen::Index r = 0; r < table.rows(); ++r) {
      for (Eigen::Index k = 0; k < table.cols(); ++k) {
        const int src = table(r, k);
        if (src >= 0) dx.row(src) += G.block(r, k * C, 1, C);
      }
    }
  });
}

/// Row-major reinterpretation of the same values.
template <typename Scalar>
Var<Scalar> reshape(Var<Scalar> a, Eigen::Index rows, Eigen::Index cols) {
  auto& g = *a.graph;
  detail::require(rows * cols == a.value().size(), "reshape", g,
                  detail::dims(a.rows(), a.cols()) + " -> " + detail::dims(rows, cols));
  const int ia = a.id;
  Matrix<Scalar> v = Eigen::Map<const Matrix<Scalar>>(a.value().data(), rows, cols);
  return g.push("reshape", std::move(v), {ia}, [ia](Graph<Scalar>& g, int self) {
    if (!g.requires_grad(ia)) return;
    auto& dx = g.grad(ia);
    const auto& G = g.grad(self);
    Eigen::Map<Matrix<Scalar>>(dx.data(), G.rows(), G.cols()) += G;
  });
}

/// Identity in the forward pass; blocks every gradient in the backward pass.
template <typename Scalar>
Var<Scalar> stop_gradient(Var<Scalar> a) {
  return a.graph->constant(a.value());
}

/// Inverted dropout; identity when rate is 0.
template <typename Scalar>
Var<Scalar> dropout(Var<Scalar> a, Scalar rate, std::mt19937_64& rng) {
  if (rate <= Scalar(0)) return a;
  auto& g = *a.graph;
  std::bernoulli_distribution keep(1.0 - static_cast<double>(rate));
  Matrix<Scalar> mask(a.rows(), a.cols());
  const Scalar s = Scalar(1) / (Scalar(1) - rate);
  for (Eigen::Index i = 0; i < mask.size(); ++i) mask.data()[i] = keep(rng) ? s : Scalar(0);
  Matrix<Scalar> v = a.value().cwiseProduct(mask);
  const int ia = a.id;
  return g.push("dropout", std::move(v), {ia}, [ia, mask = std::move(mask)](Graph<Scalar>& g, int self) {
    g.accumulate(ia, g.grad(self).cwiseProduct(mask));
  });
}

}  // namespace objreason
