#include "autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <unordered_set>

#include "errors.hpp"

namespace sgc::ad {

std::size_t shape_numel(const Shape& shape) noexcept {
  std::size_t n = 1;
  for (std::size_t d : shape) n *= d;
  return shape.empty() ? 0 : n;
}

std::string shape_str(const Shape& shape) {
  std::ostringstream os;
  os << "[";
  for (std::size_t i = 0; i < shape.size(); ++i) os << (i ? "," : "") << shape[i];
  os << "]";
  return os.str();
}

template <class T>
Tensor<T>::Tensor(Shape shape, std::vector<T> data) : shape_(std::move(shape)), data_(std::move(data)) {
  if (shape_numel(shape_) != data_.size()) {
    throw ShapeError("tensor shape " + shape_str(shape_) + " does not match " + std::to_string(data_.size()) +
                     " elements");
  }
}

template <class T>
T Tensor<T>::item() const {
  if (data_.size() != 1) throw ShapeError("item() on tensor of shape " + shape_str(shape_));
  return data_[0];
}

template <class T>
Tensor<T> Tensor<T>::reshaped(Shape shape) const {
  return Tensor(std::move(shape), data_);
}

template <class T>
Tensor<T>& Node<T>::ensure_grad() {
  if (grad.empty()) grad = Tensor<T>(value.shape());
  return grad;
}

template <class T>
Var<T> Var<T>::leaf(Tensor<T> value, bool requires_grad) {
  auto node = std::make_shared<Node<T>>();
  node->value = std::move(value);
  node->requires_grad = requires_grad;
  return Var<T>(std::move(node));
}

namespace {
thread_local bool t_no_grad = false;
}  // namespace

NoGradGuard::NoGradGuard() : previous_(t_no_grad) { t_no_grad = true; }
NoGradGuard::~NoGradGuard() { t_no_grad = previous_; }
bool NoGradGuard::active() noexcept { return t_no_grad; }

template <class T>
Var<T> make_result(const char* op, Tensor<T> value, std::vector<Var<T>> inputs,
                   std::function<void(Node<T>&)> backward) {
  auto node = std::make_shared<Node<T>>();
  node->value = std::move(value);
  node->op = op;
  const bool needs = !t_no_grad && std::ranges::any_of(inputs, [](const Var<T>& v) { return v.requires_grad(); });
  if (needs) {
    node->requires_grad = true;
    node->inputs.reserve(inputs.size());
    for (auto& v : inputs) node->inputs.push_back(v.node_ptr());
    node->backward = std::move(backward);
  }
  return Var<T>(std::move(node));
}

template <class T>
ComputeGraph<T> ComputeGraph<T>::trace(const Var<T>& root) {
  ComputeGraph g;
  g.root_ = &root.node();
  if (!root.requires_grad()) return g;
  // Iterative post-order DFS; a node is emitted after all of its inputs.
  std::unordered_set<Node<T>*> seen;
  std::vector<std::pair<Node<T>*, std::size_t>> stack;
  stack.emplace_back(g.root_, 0);
  seen.insert(g.root_);
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->inputs.size()) {
      Node<T>* child = node->inputs[next++].get();
      if (child->requires_grad && seen.insert(child).second) stack.emplace_back(child, 0);
    } else {
      g.order_.push_back(node);
      stack.pop_back();
    }
  }
  return g;
}

template <class T>
void ComputeGraph<T>::run_backward() {
  if (order_.empty()) return;
  root_->ensure_grad().fill(T(1));
  for (auto it = order_.rbegin(); it != order_.rend(); ++it) {
    Node<T>* node = *it;
    if (node->backward && !node->grad.empty()) node->backward(*node);
  }
}

template <class T>
void backward(const Var<T>& loss) {
  if (!loss.defined()) throw StateError("backward on an undefined variable");
  if (loss.numel() != 1) throw ShapeError("backward needs a scalar loss, got shape " + shape_str(loss.shape()));
  Node<T>& root = loss.node();
  if (root.backward_done) throw StateError("backward already ran for this loss");
  ComputeGraph<T>::trace(loss).run_backward();
  root.backward_done = true;
}

namespace {

bool is_binary(ElementwiseOp kind) {
  return kind == ElementwiseOp::add || kind == ElementwiseOp::sub || kind == ElementwiseOp::mul ||
         kind == ElementwiseOp::div;
}

template <class T>
T clamp_denominator(T d) {
  const T eps = static_cast<T>(kClampEps);
  if (d >= T(0)) return d < eps ? eps : d;
  return d > -eps ? -eps : d;
}

template <class T>
bool denominator_clamped(T d) {
  return std::abs(d) < static_cast<T>(kClampEps);
}

template <class T>
void accumulate_broadcast(Node<T>& input, bool broadcast, std::span<const T> contrib) {
  Tensor<T>& g = input.ensure_grad();
  if (broadcast) {
    double total = 0.0;
    for (T c : contrib) total += c;
    g[0] += static_cast<T>(total);
  } else {
    for (std::size_t i = 0; i < contrib.size(); ++i) g[i] += contrib[i];
  }
}

template <class T>
Var<T> binary(ElementwiseOp kind, const Var<T>& a, const Var<T>& b) {
  const bool broadcast = a.shape() != b.shape();
  if (broadcast && b.numel() != 1) {
    throw ShapeError("elementwise shape mismatch " + shape_str(a.shape()) + " vs " + shape_str(b.shape()));
  }
  const Tensor<T>& av = a.value();
  const Tensor<T>& bv = b.value();
  const std::size_t n = av.numel();
  Tensor<T> out(av.shape());
  auto bat = [&](std::size_t i) { return broadcast ? bv[0] : bv[i]; };
  const char* name = "add";
  switch (kind) {
    case ElementwiseOp::add:
      for (std::size_t i = 0; i < n; ++i) out[i] = av[i] + bat(i);
      break;
    case ElementwiseOp::sub:
      name = "sub";
      for (std::size_t i = 0; i < n; ++i) out[i] = av[i] - bat(i);
      break;
    case ElementwiseOp::mul:
      name = "mul";
      for (std::size_t i = 0; i < n; ++i) out[i] = av[i] * bat(i);
      break;
    case ElementwiseOp::div:
      name = "div";
      for (std::size_t i = 0; i < n; ++i) out[i] = av[i] / clamp_denominator(bat(i));
      break;
    default:
      throw DomainError("not a binary elementwise op");
  }
  return make_result<T>(name, std::move(out), {a, b}, [kind, broadcast](Node<T>& self) {
    Node<T>& na = *self.inputs[0];
    Node<T>& nb = *self.inputs[1];
    const Tensor<T>& g = self.grad;
    const std::size_t n = g.numel();
    auto bat = [&](std::size_t i) { return broadcast ? nb.value[0] : nb.value[i]; };
    std::vector<T> cb;
    if (nb.requires_grad) cb.resize(n);
    if (na.requires_grad) na.ensure_grad();
    switch (kind) {
      case ElementwiseOp::add:
        for (std::size_t i = 0; i < n; ++i) {
          if (na.requires_grad) na.grad[i] += g[i];
          if (nb.requires_grad) cb[i] = g[i];
        }
        break;
      case ElementwiseOp::sub:
        for (std::size_t i = 0; i < n; ++i) {
          if (na.requires_grad) na.grad[i] += g[i];
          if (nb.requires_grad) cb[i] = -g[i];
        }
        break;
      case ElementwiseOp::mul:
        for (std::size_t i = 0; i < n; ++i) {
          if (na.requires_grad) na.grad[i] += g[i] * bat(i);
          if (nb.requires_grad) cb[i] = g[i] * na.value[i];
        }
        break;
      case ElementwiseOp::div:
        for (std::size_t i = 0; i < n; ++i) {
          const T d = clamp_denominator(bat(i));
          if (na.requires_grad) na.grad[i] += g[i] / d;
          if (nb.requires_grad) cb[i] = denominator_clamped(bat(i)) ? T(0) : -g[i] * na.value[i] / (d * d);
        }
        break;
      default:
        break;
    }
    if (nb.requires_grad) accumulate_broadcast<T>(nb, broadcast, cb);
  });
}

template <class T>
Var<T> unary(ElementwiseOp kind, const Var<T>& a, T lo, T hi) {
  const Tensor<T>& av = a.value();
  const std::size_t n = av.numel();
  Tensor<T> out(av.shape());
  const T eps = static_cast<T>(kClampEps);
  const char* name = "log";
  switch (kind) {
    case ElementwiseOp::log:
      for (std::size_t i = 0; i < n; ++i) out[i] = std::log(std::clamp(av[i], eps, T(1)));
      break;
    case ElementwiseOp::exp:
      name = "exp";
      for (std::size_t i = 0; i < n; ++i) out[i] = std::exp(av[i]);
      break;
    case ElementwiseOp::abs:
      name = "abs";
      for (std::size_t i = 0; i < n; ++i) out[i] = std::abs(av[i]);
      break;
    case ElementwiseOp::clamp:
      name = "clamp";
      for (std::size_t i = 0; i < n; ++i) out[i] = std::clamp(av[i], lo, hi);
      break;
    default:
      throw DomainError("not a unary elementwise op");
  }
  return make_result<T>(name, std::move(out), {a}, [kind, lo, hi, eps](Node<T>& self) {
    Node<T>& na = *self.inputs[0];
    Tensor<T>& ga = na.ensure_grad();
    const Tensor<T>& g = self.grad;
    const Tensor<T>& x = na.value;
    const std::size_t n = g.numel();
    switch (kind) {
      case ElementwiseOp::log:
        for (std::size_t i = 0; i < n; ++i) {
          if (x[i] >= eps && x[i] <= T(1)) ga[i] += g[i] / x[i];
        }
        break;
      case ElementwiseOp::exp:
        for (std::size_t i = 0; i < n; ++i) ga[i] += g[i] * self.value[i];
        break;
      case ElementwiseOp::abs:
        for (std::size_t i = 0; i < n; ++i) {
          if (x[i] > T(0)) ga[i] += g[i];
          else if (x[i] < T(0)) ga[i] -= g[i];
        }
        break;
      case ElementwiseOp::clamp:
        for (std::size_t i = 0; i < n; ++i) {
          if (x[i] >= lo && x[i] <= hi) ga[i] += g[i];
        }
        break;
      default:
        break;
    }
  });
}

}  // namespace

template <class T>
Var<T> elementwise(ElementwiseOp kind, const Var<T>& a, const Var<T>& b) {
  if (is_binary(kind)) return binary(kind, a, b);
  if (kind == ElementwiseOp::clamp) {
    throw DomainError("clamp needs explicit bounds; use clamp(a, lo, hi)");
  }
  return unary<T>(kind, a, T(0), T(0));
}

template <class T> Var<T> add(const Var<T>& a, const Var<T>& b) { return binary(ElementwiseOp::add, a, b); }
template <class T> Var<T> sub(const Var<T>& a, const Var<T>& b) { return binary(ElementwiseOp::sub, a, b); }
template <class T> Var<T> mul(const Var<T>& a, const Var<T>& b) { return binary(ElementwiseOp::mul, a, b); }
template <class T> Var<T> div(const Var<T>& a, const Var<T>& b) { return binary(ElementwiseOp::div, a, b); }
template <class T> Var<T> log(const Var<T>& a) { return unary<T>(ElementwiseOp::log, a, T(0), T(0)); }
template <class T> Var<T> exp(const Var<T>& a) { return unary<T>(ElementwiseOp::exp, a, T(0), T(0)); }
template <class T> Var<T> abs(const Var<T>& a) { return unary<T>(ElementwiseOp::abs, a, T(0), T(0)); }

template <class T>
Var<T> clamp(const Var<T>& a, T lo, T hi) {
  if (!(lo <= hi)) throw DomainError("clamp bounds inverted");
  return unary<T>(ElementwiseOp::clamp, a, lo, hi);
}

template <class T>
Var<T> add_scalar(const Var<T>& a, T s) {
  return add(a, Var<T>::constant(Tensor<T>::scalar(s)));
}

template <class T>
Var<T> mul_scalar(const Var<T>& a, T s) {
  return mul(a, Var<T>::constant(Tensor<T>::scalar(s)));
}

template <class T>
Var<T> rsub_scalar(T s, const Var<T>& a) {
  Tensor<T> out(a.shape());
  for (std::size_t i = 0; i < out.numel(); ++i) out[i] = s - a.value()[i];
  return make_result<T>("rsub", std::move(out), {a}, [](Node<T>& self) {
    Tensor<T>& ga = self.inputs[0]->ensure_grad();
    for (std::size_t i = 0; i < ga.numel(); ++i) ga[i] -= self.grad[i];
  });
}

template <class T>
Var<T> reduce(ReduceOp kind, const Var<T>& a) {
  const std::size_t n = a.numel();
  if (n == 0) throw ShapeError("reduction over an empty tensor");
  double total = 0.0;
  for (T v : a.value().data()) total += static_cast<double>(v);
  const double scale = kind == ReduceOp::mean ? 1.0 / static_cast<double>(n) : 1.0;
  Tensor<T> out = Tensor<T>::scalar(static_cast<T>(total * scale));
  return make_result<T>(kind == ReduceOp::mean ? "mean" : "sum", std::move(out), {a}, [scale](Node<T>& self) {
    Tensor<T>& ga = self.inputs[0]->ensure_grad();
    const T g = static_cast<T>(static_cast<double>(self.grad[0]) * scale);
    for (std::size_t i = 0; i < ga.numel(); ++i) ga[i] += g;
  });
}

#define SGC_INSTANTIATE_AUTODIFF(T)                                                  \
  template class Tensor<T>;                                                          \
  template struct Node<T>;                                                           \
  template class Var<T>;                                                             \
  template class ComputeGraph<T>;                                                    \
  template Var<T> make_result<T>(const char*, Tensor<T>, std::vector<Var<T>>,        \
                                 std::function<void(Node<T>&)>);                     \
  template void backward<T>(const Var<T>&);                                          \
  template Var<T> elementwise<T>(ElementwiseOp, const Var<T>&, const Var<T>&);      \
  template Var<T> add<T>(const Var<T>&, const Var<T>&);                              \
  template Var<T> sub<T>(const Var<T>&, const Var<T>&);                              \
  template Var<T> mul<T>(const Var<T>&, const Var<T>&);                              \
  template Var<T> div<T>(const Var<T>&, const Var<T>&);                              \
  template Var<T> log<T>(const Var<T>&);                                             \
  template Var<T> exp<T>(const Var<T>&);                                             \
  template Var<T> abs<T>(const Var<T>&);                                             \
  template Var<T> clamp<T>(const Var<T>&, T, T);                                     \
  template Var<T> add_scalar<T>(const Var<T>&, T);                                   \
  template Var<T> mul_scalar<T>(const Var<T>&, T);                                   \
  template Var<T> rsub_scalar<T>(T, const Var<T>&);                                  \
  template Var<T> reduce<T>(ReduceOp, const Var<T>&);

SGC_INSTANTIATE_AUTODIFF(float)
SGC_INSTANTIATE_AUTODIFF(double)

}  // namespace sgc::ad
