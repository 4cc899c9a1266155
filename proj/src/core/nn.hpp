#pragma once

#include <cstddef>

#include "autodiff.hpp"

namespace sgc::nn {

using ad::Tensor;
using ad::Var;

// 2-D cross-correlation, stride 1, zero "same" padding (odd kernels only).
// weight: [out, in, kh, kw], bias: [out].
template <class T>
struct ConvSpec {
  std::size_t in_channels = 0;
  std::size_t out_channels = 0;
  std::size_t kernel_height = 3;
  std::size_t kernel_width = 3;
  Var<T> weight;
  Var<T> bias;
};

// 2x2 window, stride 2.
struct PoolSpec {
  std::size_t window = 2;
  std::size_t stride = 2;
};

// Stride-2, 2x2 transposed convolution halving the channel count.
// weight: [in, out, 2, 2], bias: [out].
template <class T>
struct TransposeConvSpec {
  std::size_t in_channels = 0;
  std::size_t out_channels = 0;
  Var<T> weight;
  Var<T> bias;
};

template <class T>
Var<T> conv2d(const Var<T>& input, const Var<T>& weight, const Var<T>& bias);
template <class T>
Var<T> conv2d(const Var<T>& input, const ConvSpec<T>& spec);

// Backward routes each window's gradient to its maximum; ties go to the first
// element in row-major order.
template <class T>
Var<T> max_pool2d(const Var<T>& input, const PoolSpec& spec = {});

template <class T>
Var<T> transpose_conv2d(const Var<T>& input, const Var<T>& weight, const Var<T>& bias);
template <class T>
Var<T> transpose_conv2d(const Var<T>& input, const TransposeConvSpec<T>& spec);

// [N,C1,H,W] ++ [N,C2,H,W] -> [N,C1+C2,H,W]
template <class T>
Var<T> concat_channels(const Var<T>& a, const Var<T>& b);

enum class Activation { relu, sigmoid };

// relu has subgradient 0 at 0. sigmoid stays strictly inside (0, 1) even where
// the exact value rounds to 0 or 1.
template <class T>
Var<T> activation(Activation kind, const Var<T>& input);
template <class T> Var<T> relu(const Var<T>& x) { return activation(Activation::relu, x); }
template <class T> Var<T> sigmoid(const Var<T>& x) { return activation(Activation::sigmoid, x); }

}  // namespace sgc::nn
