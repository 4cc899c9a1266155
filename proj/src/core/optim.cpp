#include "optim.hpp"

#include <cmath>
#include <string>

#include "errors.hpp"

namespace sgc::ad {

namespace {
constexpr double kBeta1 = 0.9;
constexpr double kBeta2 = 0.999;
constexpr double kAdamEps = 1e-8;
}  // namespace

OptimizerKind parse_optimizer(std::string_view name) {
  if (name == "sgd") return OptimizerKind::sgd;
  if (name == "adam") return OptimizerKind::adam;
  throw ConfigError("unknown optimizer '" + std::string(name) + "' (expected sgd or adam)");
}

const char* optimizer_name(OptimizerKind kind) noexcept {
  return kind == OptimizerKind::sgd ? "sgd" : "adam";
}

template <class T>
Optimizer<T>::Optimizer(std::vector<Var<T>> params, OptimizerKind kind, double learning_rate)
    : params_(std::move(params)), kind_(kind), lr_(learning_rate) {
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
    throw ConfigError("learning rate must be positive, got " + std::to_string(learning_rate));
  }
  if (kind_ == OptimizerKind::adam) {
    for (const auto& p : params_) {
      m_.emplace_back(p.numel(), 0.0);
      v_.emplace_back(p.numel(), 0.0);
    }
  }
}

template <class T>
void Optimizer<T>::step() {
  for (std::size_t k = 0; k < params_.size(); ++k) {
    if (!params_[k].has_grad()) {
      throw StateError("parameter " + std::to_string(k) + " has no gradient; run backward first");
    }
  }
  ++t_;
  const double bc1 = 1.0 - std::pow(kBeta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(kBeta2, static_cast<double>(t_));
  for (std::size_t k = 0; k < params_.size(); ++k) {
    Var<T>& p = params_[k];
    Tensor<T>& value = p.mutable_value();
    const Tensor<T>& grad = p.grad();
    if (kind_ == OptimizerKind::sgd) {
      for (std::size_t i = 0; i < value.numel(); ++i) {
        value[i] = static_cast<T>(value[i] - lr_ * static_cast<double>(grad[i]));
      }
    } else {
      auto& m = m_[k];
      auto& v = v_[k];
      for (std::size_t i = 0; i < value.numel(); ++i) {
        const double g = grad[i];
        m[i] = kBeta1 * m[i] + (1.0 - kBeta1) * g;
        v[i] = kBeta2 * v[i] + (1.0 - kBeta2) * g * g;
        const double mhat = m[i] / bc1;
        const double vhat = v[i] / bc2;
        value[i] = static_cast<T>(value[i] - lr_ * mhat / (std::sqrt(vhat) + kAdamEps));
      }
    }
  }
  zero_grad();
}

template <class T>
void Optimizer<T>::zero_grad() {
  for (auto& p : params_) p.zero_grad();
}

template <class T>
void sgd_step(std::vector<Var<T>>& params, double learning_rate) {
  Optimizer<T>(params, OptimizerKind::sgd, learning_rate).step();
}

template class Optimizer<float>;
template class Optimizer<double>;
template void sgd_step<float>(std::vector<Var<float>>&, double);
template void sgd_step<double>(std::vector<Var<double>>&, double);

}  // namespace sgc::ad
