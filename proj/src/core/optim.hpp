#pragma once

#include <string_view>
#include <vector>

#include "autodiff.hpp"

namespace sgc::ad {

enum class OptimizerKind { sgd, adam };

OptimizerKind parse_optimizer(std::string_view name);
const char* optimizer_name(OptimizerKind kind) noexcept;

// In-place parameter update. Plain SGD: p -= lr * g. Adam uses the usual
// bias-corrected moment estimates with beta1 = 0.9, beta2 = 0.999, eps = 1e-8.
// Gradients are cleared after every step.
template <class T>
class Optimizer {
 public:
  Optimizer(std::vector<Var<T>> params, OptimizerKind kind, double learning_rate);

  // Throws StateError if any parameter has no gradient.
  void step();
  void zero_grad();

  OptimizerKind kind() const noexcept { return kind_; }
  double learning_rate() const noexcept { return lr_; }
  long steps_taken() const noexcept { return t_; }

 private:
  std::vector<Var<T>> params_;
  OptimizerKind kind_;
  double lr_;
  long t_ = 0;
  std::vector<std::vector<double>> m_;
  std::vector<std::vector<double>> v_;
};

// One-shot update for callers that keep no optimizer state (SGD only).
template <class T>
void sgd_step(std::vector<Var<T>>& params, double learning_rate);

}  // namespace sgc::ad
