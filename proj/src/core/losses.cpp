#include "losses.hpp"

#include <cmath>
#include <string>

#include "errors.hpp"

namespace sgc {

using ad::Tensor;
using ad::Var;

const char* loss_name(LossKind kind) noexcept {
  switch (kind) {
    case LossKind::binary_cross_entropy: return "bce";
    case LossKind::categorical_cross_entropy: return "cce";
    case LossKind::mse: return "mse";
    case LossKind::mae: return "mae";
    case LossKind::mape: return "mape";
  }
  return "?";
}

LossKind parse_loss(std::string_view name) {
  for (LossKind k : kAllLosses) {
    if (name == loss_name(k)) return k;
  }
  throw ConfigError("unknown loss '" + std::string(name) + "' (expected bce, cce, mse, mae or mape)");
}

namespace {

bool is_cross_entropy(LossKind kind) {
  return kind == LossKind::binary_cross_entropy || kind == LossKind::categorical_cross_entropy;
}

template <class T>
void check_inputs(LossKind kind, const Tensor<T>& pred, const Tensor<T>& target) {
  if (pred.shape() != target.shape()) {
    throw ShapeError("loss shape mismatch " + ad::shape_str(pred.shape()) + " vs " + ad::shape_str(target.shape()));
  }
  if (pred.empty()) throw ShapeError("loss over an empty tensor");
  if (is_cross_entropy(kind)) {
    for (std::size_t i = 0; i < target.numel(); ++i) {
      if (!(target[i] >= T(0) && target[i] <= T(1))) {
        throw DomainError(std::string(loss_name(kind)) + " needs targets in [0,1]; element " + std::to_string(i) +
                          " is " + std::to_string(static_cast<double>(target[i])));
      }
    }
  }
}

template <class T>
T prob_lo() {
  return static_cast<T>(kProbEps);
}
template <class T>
T prob_hi() {
  return static_cast<T>(1.0 - kProbEps);
}

}  // namespace

template <class T>
Var<T> loss_value(LossKind kind, const Var<T>& pred, const Var<T>& target) {
  check_inputs(kind, pred.value(), target.value());
  switch (kind) {
    case LossKind::binary_cross_entropy: {
      Var<T> p = ad::clamp(pred, prob_lo<T>(), prob_hi<T>());
      Var<T> ll = ad::add(ad::mul(target, ad::log(p)),
                          ad::mul(ad::rsub_scalar(T(1), target), ad::log(ad::rsub_scalar(T(1), p))));
      return ad::mul_scalar(ad::mean(ll), T(-1));
    }
    case LossKind::categorical_cross_entropy: {
      Var<T> p = ad::clamp(pred, prob_lo<T>(), prob_hi<T>());
      return ad::mul_scalar(ad::mean(ad::mul(target, ad::log(p))), T(-1));
    }
    case LossKind::mse: {
      Var<T> d = ad::sub(target, pred);
      return ad::mean(ad::mul(d, d));
    }
    case LossKind::mae:
      return ad::mean(ad::abs(ad::sub(target, pred)));
    case LossKind::mape:
      return ad::mean(ad::div(ad::abs(ad::sub(target, pred)), ad::abs(target)));
  }
  throw DomainError("unknown loss kind");
}

template <class T>
Tensor<T> loss_gradient(LossKind kind, const Tensor<T>& pred, const Tensor<T>& target) {
  check_inputs(kind, pred, target);
  const std::size_t n = pred.numel();
  const double inv_n = 1.0 / static_cast<double>(n);
  const double lo = prob_lo<T>();
  const double hi = prob_hi<T>();
  Tensor<T> grad(pred.shape());
  for (std::size_t i = 0; i < n; ++i) {
    const double p = pred[i];
    const double y = target[i];
    double g = 0.0;
    switch (kind) {
      case LossKind::binary_cross_entropy:
        if (p >= lo && p <= hi) {
          // 1 - p is formed in T, as the autodiff route does.
          const double q = static_cast<T>(T(1) - pred[i]);
          g = -y / p + (1.0 - y) / q;
        }
        break;
      case LossKind::categorical_cross_entropy:
        if (p >= lo && p <= hi) g = -y / p;
        break;
      case LossKind::mse:
        g = 2.0 * (p - y);
        break;
      case LossKind::mae:
        g = p > y ? 1.0 : (p < y ? -1.0 : 0.0);
        break;
      case LossKind::mape: {
        const double denom = std::max(std::abs(y), static_cast<double>(static_cast<T>(kProbEps)));
        g = (p > y ? 1.0 : (p < y ? -1.0 : 0.0)) / denom;
        break;
      }
    }
    grad[i] = static_cast<T>(g * inv_n);
  }
  return grad;
}

template Var<float> loss_value<float>(LossKind, const Var<float>&, const Var<float>&);
template Var<double> loss_value<double>(LossKind, const Var<double>&, const Var<double>&);
template Tensor<float> loss_gradient<float>(LossKind, const Tensor<float>&, const Tensor<float>&);
template Tensor<double> loss_gradient<double>(LossKind, const Tensor<double>&, const Tensor<double>&);

}  // namespace sgc
