#pragma once

#include <array>
#include <string_view>

#include "autodiff.hpp"

namespace sgc {

enum class LossKind { binary_cross_entropy, categorical_cross_entropy, mse, mae, mape };

inline constexpr std::array<LossKind, 5> kAllLosses = {
    LossKind::binary_cross_entropy, LossKind::categorical_cross_entropy, LossKind::mse, LossKind::mae,
    LossKind::mape};

// Short names used on the command line and in reports: bce | cce | mse | mae | mape.
const char* loss_name(LossKind kind) noexcept;
LossKind parse_loss(std::string_view name);

// Probabilities are clamped into [kProbEps, 1 - kProbEps] before logs; mape
// denominators are raised to magnitude >= kProbEps.
inline constexpr double kProbEps = 1e-7;

// Every kind reduces by the mean over all elements (batch x bands x pixels):
//   bce  -(y log p + (1 - y) log(1 - p))
//   cce  -y log p, with the band values playing the role of class terms
//   mse  (y - p)^2
//   mae  |y - p|
//   mape |y - p| / |y|
// Built from autodiff ops, so backward() through the result is one route to
// the gradient; loss_gradient() is the other.
template <class T>
ad::Var<T> loss_value(LossKind kind, const ad::Var<T>& pred, const ad::Var<T>& target);

// Closed-form d(loss)/d(pred). mae's subgradient at zero error is 0.
template <class T>
ad::Tensor<T> loss_gradient(LossKind kind, const ad::Tensor<T>& pred, const ad::Tensor<T>& target);

}  // namespace sgc
