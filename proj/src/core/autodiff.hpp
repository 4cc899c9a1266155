#pragma once

// Reverse-mode automatic differentiation over Tensor<T>.
//
// A Var is a shared handle to a graph node. Ops on Vars produce new nodes that
// remember their inputs and a closure propagating the output gradient back to
// them, but only when some input requires a gradient; inference graphs keep no
// history. backward() orders the reachable nodes topologically and runs each
// closure exactly once in reverse order.
//
// Reductions accumulate in double regardless of T.

#include <functional>
#include <memory>
#include <vector>

#include "tensor.hpp"

namespace sgc::ad {

// Lower clamp applied to log arguments and to division denominators.
inline constexpr double kClampEps = 1e-7;

template <class T>
struct Node {
  Tensor<T> value;
  Tensor<T> grad;  // allocated lazily, same shape as value
  bool requires_grad = false;
  bool backward_done = false;
  const char* op = "leaf";
  std::vector<std::shared_ptr<Node>> inputs;
  std::function<void(Node&)> backward;

  Tensor<T>& ensure_grad();
};

template <class T>
class Var {
 public:
  Var() = default;
  explicit Var(std::shared_ptr<Node<T>> node) : node_(std::move(node)) {}

  static Var leaf(Tensor<T> value, bool requires_grad = false);
  static Var constant(Tensor<T> value) { return leaf(std::move(value), false); }

  bool defined() const noexcept { return node_ != nullptr; }
  const Tensor<T>& value() const { return node_->value; }
  Tensor<T>& mutable_value() { return node_->value; }
  const Shape& shape() const { return node_->value.shape(); }
  std::size_t numel() const { return node_->value.numel(); }
  bool requires_grad() const { return node_->requires_grad; }
  bool has_grad() const { return !node_->grad.empty(); }
  const Tensor<T>& grad() const { return node_->grad; }
  Tensor<T>& mutable_grad() { return node_->ensure_grad(); }
  void zero_grad() { node_->grad = Tensor<T>(); }
  const char* op() const { return node_->op; }

  Node<T>& node() const { return *node_; }
  const std::shared_ptr<Node<T>>& node_ptr() const { return node_; }

 private:
  std::shared_ptr<Node<T>> node_;
};

// While a NoGradGuard is alive on a thread, ops on that thread record no
// history, so forward passes keep no intermediate tensors alive.
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

  static bool active() noexcept;

 private:
  bool previous_;
};

// Builds the output node for an op. `backward` is stored only when at least
// one input requires a gradient.
template <class T>
Var<T> make_result(const char* op, Tensor<T> value, std::vector<Var<T>> inputs,
                   std::function<void(Node<T>&)> backward);

// Topologically ordered record of the nodes that contribute to a root,
// restricted to nodes requiring gradients. Inputs precede their consumers.
template <class T>
class ComputeGraph {
 public:
  static ComputeGraph trace(const Var<T>& root);

  std::size_t size() const noexcept { return order_.size(); }
  const std::vector<Node<T>*>& nodes() const noexcept { return order_; }

  // Seeds d(root)/d(root) = 1 and runs every closure once, last node first.
  void run_backward();

 private:
  Node<T>* root_ = nullptr;
  std::vector<Node<T>*> order_;
};

// Populates grad on every requires_grad leaf. Rejects non-scalar roots
// (ShapeError) and a second call on the same root (StateError).
template <class T>
void backward(const Var<T>& loss);

enum class ElementwiseOp { add, sub, mul, div, log, exp, abs, clamp };

// Binary kinds take b with the same shape as a or with a single element
// (broadcast). Unary kinds ignore b.
template <class T>
Var<T> elementwise(ElementwiseOp kind, const Var<T>& a, const Var<T>& b);

template <class T> Var<T> add(const Var<T>& a, const Var<T>& b);
template <class T> Var<T> sub(const Var<T>& a, const Var<T>& b);
template <class T> Var<T> mul(const Var<T>& a, const Var<T>& b);
// Denominator magnitude is raised to at least kClampEps, keeping its sign (0 counts as positive).
template <class T> Var<T> div(const Var<T>& a, const Var<T>& b);
// Argument clamped into [kClampEps, 1] before the logarithm.
template <class T> Var<T> log(const Var<T>& a);
template <class T> Var<T> exp(const Var<T>& a);
template <class T> Var<T> abs(const Var<T>& a);
template <class T> Var<T> clamp(const Var<T>& a, T lo, T hi);

template <class T> Var<T> add_scalar(const Var<T>& a, T s);
template <class T> Var<T> mul_scalar(const Var<T>& a, T s);
// s - a
template <class T> Var<T> rsub_scalar(T s, const Var<T>& a);

enum class ReduceOp { sum, mean };

template <class T>
Var<T> reduce(ReduceOp kind, const Var<T>& a);
template <class T> Var<T> sum(const Var<T>& a) { return reduce(ReduceOp::sum, a); }
template <class T> Var<T> mean(const Var<T>& a) { return reduce(ReduceOp::mean, a); }

template <class T> Var<T> operator+(const Var<T>& a, const Var<T>& b) { return add(a, b); }
template <class T> Var<T> operator-(const Var<T>& a, const Var<T>& b) { return sub(a, b); }
template <class T> Var<T> operator*(const Var<T>& a, const Var<T>& b) { return mul(a, b); }
template <class T> Var<T> operator/(const Var<T>& a, const Var<T>& b) { return div(a, b); }

}  // namespace sgc::ad
