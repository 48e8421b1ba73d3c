// Copyright 2026 The SRS Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Define-by-run reverse-mode autodiff. Every differentiable op creates a Node
// holding its value, the parent nodes it read, and a closure that pushes the
// node's gradient into those parents. backward() walks the reachable nodes in
// decreasing creation order, which is a reverse topological order because a
// node is always created after its parents.

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "srs/tensor.hpp"

namespace srs {

template <typename T>
struct Node {
  BasicTensor<T> value;
  // Materialized on first accumulation; an empty grad reads as zeros.
  BasicTensor<T> grad;
  bool requires_grad = false;
  bool retain_grad = false;
  std::uint64_t sequence = 0;
  std::vector<std::shared_ptr<Node>> parents;
  std::function<void(Node&)> backward_fn;

  void accumulate(const BasicTensor<T>& g);
  bool is_leaf() const { return !backward_fn; }
};

/// Handle to a graph node. Copies share the node.
template <typename T>
class Var {
 public:
  Var() = default;
  explicit Var(BasicTensor<T> value, bool requires_grad = false);

  static Var parameter(BasicTensor<T> value) { return Var(std::move(value), true); }

  bool defined() const noexcept { return node_ != nullptr; }
  const BasicTensor<T>& value() const { return node_->value; }
  BasicTensor<T>& mutable_value() { return node_->value; }
  const Shape& shape() const { return node_->value.shape(); }
  std::int64_t dim(std::size_t axis) const { return node_->value.dim(axis); }
  std::int64_t numel() const { return node_->value.numel(); }

  /// Gradient with the value's shape; zeros before any backward pass.
  BasicTensor<T> grad() const;
  bool has_grad() const { return node_->grad.defined(); }
  bool requires_grad() const noexcept { return node_ && node_->requires_grad; }
  void set_requires_grad(bool flag) { node_->requires_grad = flag; }
  /// Keep this (non-leaf) node's gradient after backward.
  void retain_grad() { node_->retain_grad = true; }
  void zero_grad();

  const std::shared_ptr<Node<T>>& node() const noexcept { return node_; }

 private:
  std::shared_ptr<Node<T>> node_;
};

/// Disables graph recording on the current thread for its lifetime.
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

bool grad_enabled();

/// Builds the result node of an op. The node records its parents and
/// backward closure only when grad mode is on and some parent needs a grad.
template <typename T>
Var<T> make_result(BasicTensor<T> value, std::vector<Var<T>> parents, std::function<void(Node<T>&)> backward_fn);

/// d(loss)/d(node) for every reachable node that requires grad, accumulated
/// additively. loss must hold exactly one element.
template <typename T>
void backward(const Var<T>& loss);

/// The nodes backward() would visit, in visiting order.
template <typename T>
std::vector<Node<T>*> backward_order(const Var<T>& loss);

/// max_i |analytic_i - numeric_i| / (|analytic_i| + |numeric_i| + 1e-12) over
/// every coordinate of every input, with central differences of step eps.
/// `f` is re-evaluated with each input perturbed in place.
double grad_check(const std::function<Var<double>()>& f, std::vector<Var<double>> inputs, double eps = 1e-6);

/// Single-input form: f(x).
double grad_check(const std::function<Var<double>(const Var<double>&)>& f, const TensorD& x, double eps = 1e-6);

}  // namespace srs
