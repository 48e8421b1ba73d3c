// Copyright 2026 The SRS Authors
// SPDX-License-Identifier: Apache-2.0

#include "srs/autodiff.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <unordered_set>

namespace srs {

namespace {

std::atomic<std::uint64_t> g_sequence{0};
thread_local bool t_grad_enabled = true;

}  // namespace

bool grad_enabled() { return t_grad_enabled; }

NoGradGuard::NoGradGuard() : previous_(t_grad_enabled) { t_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { t_grad_enabled = previous_; }

template <typename T>
void Node<T>::accumulate(const BasicTensor<T>& g) {
  if (!requires_grad) return;
  require(g.shape() == value.shape(), ErrorKind::kShapeMismatch,
          "gradient " + shape_str(g.shape()) + " for value " + shape_str(value.shape()));
  if (!grad.defined()) {
    grad = g;
    return;
  }
  T* dst = grad.ptr();
  const T* src = g.ptr();
  const std::int64_t n = grad.numel();
  for (std::int64_t i = 0; i < n; ++i) dst[i] += src[i];
}

template <typename T>
Var<T>::Var(BasicTensor<T> value, bool requires_grad) : node_(std::make_shared<Node<T>>()) {
  node_->value = std::move(value);
  node_->requires_grad = requires_grad;
  node_->sequence = g_sequence.fetch_add(1, std::memory_order_relaxed);
}

template <typename T>
BasicTensor<T> Var<T>::grad() const {
  if (node_->grad.defined()) return node_->grad;
  return BasicTensor<T>::zeros(node_->value.shape());
}

template <typename T>
void Var<T>::zero_grad() {
  if (node_->grad.defined()) {
    node_->grad.fill(T(0));
  } else if (node_->requires_grad) {
    node_->grad = BasicTensor<T>::zeros(node_->value.shape());
  }
}

template <typename T>
Var<T> make_result(BasicTensor<T> value, std::vector<Var<T>> parents, std::function<void(Node<T>&)> backward_fn) {
  bool needs = t_grad_enabled &&
               std::any_of(parents.begin(), parents.end(), [](const Var<T>& p) { return p.requires_grad(); });
  Var<T> out(std::move(value), needs);
  if (needs) {
    auto& node = *out.node();
    node.parents.reserve(parents.size());
    for (auto& p : parents) node.parents.push_back(p.node());
    node.backward_fn = std::move(backward_fn);
  }
  return out;
}

template <typename T>
std::vector<Node<T>*> backward_order(const Var<T>& loss) {
  std::vector<Node<T>*> order;
  if (!loss.requires_grad()) return order;
  std::unordered_set<Node<T>*> seen;
  std::vector<Node<T>*> stack{loss.node().get()};
  seen.insert(loss.node().get());
  while (!stack.empty()) {
    Node<T>* n = stack.back();
    stack.pop_back();
    order.push_back(n);
    for (auto& p : n->parents) {
      if (p->requires_grad && seen.insert(p.get()).second) stack.push_back(p.get());
    }
  }
  std::sort(order.begin(), order.end(), [](const Node<T>* a, const Node<T>* b) { return a->sequence > b->sequence; });
  return order;
}

template <typename T>
void backward(const Var<T>& loss) {
  require(loss.defined() && loss.numel() == 1, ErrorKind::kNonScalarLoss,
          loss.defined() ? "loss has shape " + shape_str(loss.shape()) : "loss is undefined");
  if (!loss.requires_grad()) return;
  loss.node()->accumulate(BasicTensor<T>::ones(loss.shape()));
  for (Node<T>* n : backward_order(loss)) {
    if (n->backward_fn && n->grad.defined()) {
      n->backward_fn(*n);
      // Interior gradients are consumed once; free them unless asked to keep.
      if (!n->retain_grad) n->grad = BasicTensor<T>();
    }
  }
}

double grad_check(const std::function<Var<double>()>& f, std::vector<Var<double>> inputs, double eps) {
  require(eps > 0.0 && eps <= 1e-2, ErrorKind::kInvalidArgument, "grad_check eps must lie in (0, 1e-2]");
  std::vector<bool> flags;
  for (auto& in : inputs) {
    flags.push_back(in.requires_grad());
    in.set_requires_grad(true);
    in.zero_grad();
  }
  Var<double> loss = f();
  require(loss.numel() == 1, ErrorKind::kNonScalarLoss, "grad_check needs a scalar function");
  backward(loss);

  double worst = 0.0;
  for (auto& in : inputs) {
    const TensorD analytic = in.grad();
    auto data = in.mutable_value().data();
    for (std::size_t i = 0; i < data.size(); ++i) {
      const double saved = data[i];
      double plus, minus;
      {
        NoGradGuard guard;
        data[i] = saved + eps;
        plus = f().value()[0];
        data[i] = saved - eps;
        minus = f().value()[0];
      }
      data[i] = saved;
      const double numeric = (plus - minus) / (2.0 * eps);
      const double a = analytic[static_cast<std::int64_t>(i)];
      const double rel = std::abs(a - numeric) / (std::abs(a) + std::abs(numeric) + 1e-12);
      worst = std::max(worst, rel);
    }
  }
  for (std::size_t i = 0; i < inputs.size(); ++i) inputs[i].set_requires_grad(flags[i]);
  return worst;
}

double grad_check(const std::function<Var<double>(const Var<double>&)>& f, const TensorD& x, double eps) {
  Var<double> input(x, true);
  return grad_check([&] { return f(input); }, {input}, eps);
}

template struct Node<float>;
template struct Node<double>;
template class Var<float>;
template class Var<double>;
template Var<float> make_result(BasicTensor<float>, std::vector<Var<float>>, std::function<void(Node<float>&)>);
template Var<double> make_result(BasicTensor<double>, std::vector<Var<double>>, std::function<void(Node<double>&)>);
template void backward(const Var<float>&);
template void backward(const Var<double>&);
template std::vector<Node<float>*> backward_order(const Var<float>&);
template std::vector<Node<double>*> backward_order(const Var<double>&);

}  // namespace srs
