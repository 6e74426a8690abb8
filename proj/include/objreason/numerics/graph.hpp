#pragma once

#include <functional>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "objreason/numerics/tensor.hpp"

namespace objreason {

template <typename Scalar>
class Graph;

/// Named collection of trainable matrices. Iteration order is by name so
/// serialization and optimizer sweeps are deterministic.
template <typename Scalar>
class ParamStore {
 public:
  using Mat = Matrix<Scalar>;

  void add(const std::string& name, Mat value) {
    if (!values_.emplace(name, std::move(value)).second) {
      throw Error("ParamStore: duplicate parameter '" + name + "'");
    }
  }

  void set(const std::string& name, Mat value) { values_[name] = std::move(value); }

  bool contains(const std::string& name) const { return values_.count(name) != 0; }

  const Mat& get(const std::string& name) const {
    auto it = values_.find(name);
    if (it == values_.end()) throw Error("ParamStore: unknown parameter '" + name + "'");
    return it->second;
  }

  Mat& get_mutable(const std::string& name) {
    auto it = values_.find(name);
    if (it == values_.end()) throw Error("ParamStore: unknown parameter '" + name + "'");
    return it->second;
  }

  std::size_t size() const { return values_.size(); }

  Eigen::Index parameter_count() const {
    Eigen::Index n = 0;
    for (const auto& [name, v] : values_) n += v.size();
    return n;
  }

  std::vector<std::string> names() const {
    std::vector<std::string> out;
    out.reserve(values_.size());
    for (const auto& [name, v] : values_) out.push_back(name);
    return out;
  }

  auto begin() const { return values_.begin(); }
  auto end() const { return values_.end(); }
  auto begin() { return values_.begin(); }
  auto end() { return values_.end(); }

  template <typename Other>
  ParamStore<Other> cast() const {
    ParamStore<Other> out;
    for (const auto& [name, v] : values_) out.add(name, v.template cast<Other>());
    return out;
  }

 private:
  std::map<std::string, Mat> values_;
};

/// Lightweight handle to a node of a Graph.
template <typename Scalar>
struct Var {
  Graph<Scalar>* graph = nullptr;
  int id = -1;

  const Matrix<Scalar>& value() const;
  Eigen::Index rows() const { return value().rows(); }
  Eigen::Index cols() const { return value().cols(); }
  bool valid() const { return graph != nullptr && id >= 0; }
};

/// Define-by-run tape for reverse-mode differentiation.
///
/// Every op appends a node holding its forward value and a closure that
/// propagates the node's gradient into its inputs. Nodes are appended in
/// evaluation order, so the tape is acyclic and topologically sorted by
/// construction. A node that does not depend on any gradient-requiring leaf
/// (constants, or anything downstream of stop_gradient only) is never visited
/// during backward and contributes exactly zero upstream.
template <typename Scalar>
class Graph {
 public:
  using Mat = Matrix<Scalar>;
  using Backward = std::function<void(Graph&, int)>;

  struct Node {
    std::string op;
    Mat value;
    Mat grad;
    bool requires_grad = false;
    std::vector<int> inputs;
    Backward backward;
  };

  Graph() = default;
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  Var<Scalar> constant(Mat value) {
    return push("constant", std::move(value), {}, nullptr, false);
  }

  /// Unnamed leaf that receives a gradient.
  Var<Scalar> leaf(Mat value) { return push("leaf", std::move(value), {}, nullptr, true); }

  /// Leaf bound to a named parameter. Repeated requests within one graph
  /// return the same node so gradients accumulate in one place.
  Var<Scalar> param(const ParamStore<Scalar>& store, const std::string& name) {
    if (store_ && store_ != &store) throw Error("graph: parameters from two different stores");
    store_ = &store;
    auto it = param_nodes_.find(name);
    if (it != param_nodes_.end()) return {this, it->second};
    auto v = push("param:" + name, store.get(name), {}, nullptr, true);
    param_nodes_.emplace(name, v.id);
    return v;
  }

  bool has_param(const std::string& name) const { return param_nodes_.count(name) != 0; }

  Var<Scalar> push(std::string op, Mat value, std::vector<int> inputs, Backward backward) {
    bool rg = false;
    for (int i : inputs) rg = rg || nodes_[static_cast<std::size_t>(i)].requires_grad;
    return push(std::move(op), std::move(value), std::move(inputs), std::move(backward), rg);
  }

  const Node& node(int id) const { return nodes_[static_cast<std::size_t>(id)]; }
  const Mat& value(int id) const { return nodes_[static_cast<std::size_t>(id)].value; }
  std::size_t size() const { return nodes_.size(); }

  bool requires_grad(int id) const { return nodes_[static_cast<std::size_t>(id)].requires_grad; }

  /// Gradient buffer of a node; zero-initialised on first touch.
  Mat& grad(int id) {
    auto& n = nodes_[static_cast<std::size_t>(id)];
    if (n.grad.size() == 0) n.grad = Mat::Zero(n.value.rows(), n.value.cols());
    return n.grad;
  }

  bool has_grad(int id) const { return nodes_[static_cast<std::size_t>(id)].grad.size() != 0; }

  /// Adds `delta` into the gradient of node `id` if that node is on a
  /// gradient-carrying path.
  template <typename Derived>
  void accumulate(int id, const Eigen::MatrixBase<Derived>& delta) {
    if (!requires_grad(id)) return;
    grad(id) += delta;
  }

  void backward(Var<Scalar> root) {
    const Mat& v = value(root.id);
    if (v.rows() != 1 || v.cols() != 1) {
      throw ShapeError("backward", root.id,
                       "target must be scalar, got " + std::to_string(v.rows()) + "x" +
                           std::to_string(v.cols()));
    }
    for (auto& n : nodes_) n.grad.resize(0, 0);
    if (!requires_grad(root.id)) return;
    grad(root.id)(0, 0) = Scalar(1);
    for (int id = root.id; id >= 0; --id) {
      auto& n = nodes_[static_cast<std::size_t>(id)];
      if (!n.requires_grad || n.grad.size() == 0 || !n.backward) continue;
      n.backward(*this, id);
    }
  }

  /// Gradient of the last backward() with respect to a named parameter;
  /// zeros when the parameter was never reached.
  Mat param_grad(const std::string& name, const ParamStore<Scalar>& store) const {
    auto it = param_nodes_.find(name);
    const Mat& ref = store.get(name);
    if (it == param_nodes_.end()) return Mat::Zero(ref.rows(), ref.cols());
    const auto& n = nodes_[static_cast<std::size_t>(it->second)];
    if (n.grad.size() == 0) return Mat::Zero(ref.rows(), ref.cols());
    return n.grad;
  }

  const std::map<std::string, int>& param_nodes() const { return param_nodes_; }

 private:
  Var<Scalar> push(std::string op, Mat value, std::vector<int> inputs, Backward backward,
                   bool requires_grad) {
    Node n;
    n.op = std::move(op);
    n.value = std::move(value);
    n.inputs = std::move(inputs);
    n.backward = std::move(backward);
    n.requires_grad = requires_grad;
    nodes_.push_back(std::move(n));
    return {this, static_cast<int>(nodes_.size()) - 1};
  }

  std::vector<Node> nodes_;
  std::map<std::string, int> param_nodes_;
  const ParamStore<Scalar>* store_ = nullptr;
};

template <typename Scalar>
const Matrix<Scalar>& Var<Scalar>::value() const {
  return graph->value(id);
}

/// Reverse-mode gradients of a scalar node with respect to named parameters.
template <typename Scalar>
std::map<std::string, Matrix<Scalar>> gradient(Graph<Scalar>& graph, Var<Scalar> target,
                                               const ParamStore<Scalar>& store,
                                               const std::vector<std::string>& wrt) {
  graph.backward(target);
  std::map<std::string, Matrix<Scalar>> out;
  for (const auto& name : wrt) out.emplace(name, graph.param_grad(name, store));
  return out;
}

/// Gradients for every parameter in the store.
template <typename Scalar>
std::map<std::string, Matrix<Scalar>> gradient(Graph<Scalar>& graph, Var<Scalar> target,
                                               const ParamStore<Scalar>& store) {
  return gradient(graph, target, store, store.names());
}

}  // namespace objreason
