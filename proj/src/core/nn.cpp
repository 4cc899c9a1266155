#include "nn.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>

#include "errors.hpp"

namespace sgc::nn {

using ad::make_result;
using ad::Node;
using ad::Shape;
using ad::shape_str;

namespace {

template <class T>
using RowMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <class T>
using MapMat = Eigen::Map<RowMat<T>>;
template <class T>
using ConstMapMat = Eigen::Map<const RowMat<T>>;

void require_rank4(const Shape& s, const char* what) {
  if (s.size() != 4) throw ShapeError(std::string(what) + " expects [N,C,H,W], got " + shape_str(s));
}

struct ConvGeometry {
  std::size_t channels, height, width, kh, kw;
  std::size_t rows() const { return channels * kh * kw; }
  std::size_t cols() const { return height * width; }
};

// cols[(c*kh + i)*kw + j][y*W + x] = image[c][y + i - kh/2][x + j - kw/2], zero outside.
template <class T>
void im2col(const T* image, const ConvGeometry& g, T* cols) {
  const long ph = static_cast<long>(g.kh / 2);
  const long pw = static_cast<long>(g.kw / 2);
  const long H = static_cast<long>(g.height);
  const long W = static_cast<long>(g.width);
  for (std::size_t c = 0; c < g.channels; ++c) {
    const T* plane = image + c * g.height * g.width;
    for (std::size_t i = 0; i < g.kh; ++i) {
      for (std::size_t j = 0; j < g.kw; ++j) {
        T* row = cols + ((c * g.kh + i) * g.kw + j) * g.cols();
        const long dy = static_cast<long>(i) - ph;
        const long dx = static_cast<long>(j) - pw;
        const long x0 = std::max(0L, -dx);
        const long x1 = std::min(W, W - dx);
        for (long y = 0; y < H; ++y) {
          T* out = row + y * W;
          const long sy = y + dy;
          if (sy < 0 || sy >= H || x0 >= x1) {
            std::fill(out, out + W, T(0));
            continue;
          }
          std::fill(out, out + x0, T(0));
          std::copy(plane + sy * W + x0 + dx, plane + sy * W + x1 + dx, out + x0);
          std::fill(out + x1, out + W, T(0));
        }
      }
    }
  }
}

template <class T>
void col2im_add(const T* cols, const ConvGeometry& g, T* image) {
  const long ph = static_cast<long>(g.kh / 2);
  const long pw = static_cast<long>(g.kw / 2);
  const long H = static_cast<long>(g.height);
  const long W = static_cast<long>(g.width);
  for (std::size_t c = 0; c < g.channels; ++c) {
    T* plane = image + c * g.height * g.width;
    for (std::size_t i = 0; i < g.kh; ++i) {
      for (std::size_t j = 0; j < g.kw; ++j) {
        const T* row = cols + ((c * g.kh + i) * g.kw + j) * g.cols();
        const long dy = static_cast<long>(i) - ph;
        const long dx = static_cast<long>(j) - pw;
        const long x0 = std::max(0L, -dx);
        const long x1 = std::min(W, W - dx);
        for (long y = 0; y < H; ++y) {
          const long sy = y + dy;
          if (sy < 0 || sy >= H) continue;
          T* dst = plane + sy * W + dx;
          const T* src = row + y * W;
          for (long x = x0; x < x1; ++x) dst[x] += src[x];
        }
      }
    }
  }
}

}  // namespace

template <class T>
Var<T> conv2d(const Var<T>& input, const Var<T>& weight, const Var<T>& bias) {
  require_rank4(input.shape(), "conv2d");
  const Shape& ws = weight.shape();
  if (ws.size() != 4) throw ShapeError("conv2d weight must be [out,in,kh,kw], got " + shape_str(ws));
  const std::size_t N = input.shape()[0], C = input.shape()[1], H = input.shape()[2], W = input.shape()[3];
  const std::size_t O = ws[0];
  if (ws[1] != C) {
    throw ShapeError("conv2d channel mismatch: input has " + std::to_string(C) + ", weight expects " +
                     std::to_string(ws[1]));
  }
  if (ws[2] % 2 == 0 || ws[3] % 2 == 0) throw ShapeError("same padding needs odd kernel sizes");
  if (bias.shape() != Shape{O}) throw ShapeError("conv2d bias must be [" + std::to_string(O) + "]");

  const ConvGeometry g{C, H, W, ws[2], ws[3]};
  const std::size_t K = g.rows(), P = g.cols();
  Tensor<T> out(Shape{N, O, H, W});
  std::vector<T> cols(K * P);
  ConstMapMat<T> wmat(weight.value().ptr(), O, K);
  for (std::size_t n = 0; n < N; ++n) {
    im2col(input.value().ptr() + n * C * P, g, cols.data());
    MapMat<T> y(out.ptr() + n * O * P, O, P);
    y.noalias() = wmat * ConstMapMat<T>(cols.data(), K, P);
    for (std::size_t o = 0; o < O; ++o) y.row(o).array() += bias.value()[o];
  }

  return make_result<T>("conv2d", std::move(out), {input, weight, bias}, [g, N, O](Node<T>& self) {
    Node<T>& nx = *self.inputs[0];
    Node<T>& nw = *self.inputs[1];
    Node<T>& nb = *self.inputs[2];
    const std::size_t K = g.rows(), P = g.cols(), C = g.channels;
    std::vector<T> cols(K * P);
    ConstMapMat<T> wmat(nw.value.ptr(), O, K);
    if (nw.requires_grad) nw.ensure_grad();
    if (nx.requires_grad) nx.ensure_grad();
    if (nb.requires_grad) nb.ensure_grad();
    for (std::size_t n = 0; n < N; ++n) {
      ConstMapMat<T> dy(self.grad.ptr() + n * O * P, O, P);
      if (nb.requires_grad) {
        for (std::size_t o = 0; o < O; ++o) {
          double s = 0.0;
          for (std::size_t p = 0; p < P; ++p) s += dy(o, p);
          nb.grad[o] += static_cast<T>(s);
        }
      }
      if (nw.requires_grad) {
        im2col(nx.value.ptr() + n * C * P, g, cols.data());
        MapMat<T>(nw.grad.ptr(), O, K).noalias() += dy * ConstMapMat<T>(cols.data(), K, P).transpose();
      }
      if (nx.requires_grad) {
        MapMat<T> dcols(cols.data(), K, P);
        dcols.noalias() = wmat.transpose() * dy;
        col2im_add(cols.data(), g, nx.grad.ptr() + n * C * P);
      }
    }
  });
}

template <class T>
Var<T> conv2d(const Var<T>& input, const ConvSpec<T>& spec) {
  if (input.shape().size() == 4 && input.shape()[1] != spec.in_channels) {
    throw ShapeError("conv2d expects " + std::to_string(spec.in_channels) + " input channels, got " +
                     std::to_string(input.shape()[1]));
  }
  const Shape expected{spec.out_channels, spec.in_channels, spec.kernel_height, spec.kernel_width};
  if (spec.weight.shape() != expected) {
    throw ShapeError("conv weight " + shape_str(spec.weight.shape()) + " inconsistent with spec " +
                     shape_str(expected));
  }
  return conv2d(input, spec.weight, spec.bias);
}

template <class T>
Var<T> max_pool2d(const Var<T>& input, const PoolSpec& spec) {
  require_rank4(input.shape(), "max_pool2d");
  if (spec.window != 2 || spec.stride != 2) throw ShapeError("only 2x2 stride-2 pooling is supported");
  const std::size_t N = input.shape()[0], C = input.shape()[1], H = input.shape()[2], W = input.shape()[3];
  if (H % 2 != 0 || W % 2 != 0) {
    throw ShapeError("max_pool2d needs even spatial dims, got " + std::to_string(H) + "x" + std::to_string(W));
  }
  const std::size_t Ho = H / 2, Wo = W / 2;
  Tensor<T> out(Shape{N, C, Ho, Wo});
  std::vector<std::uint32_t> argmax(out.numel());
  const T* x = input.value().ptr();
  std::size_t k = 0;
  for (std::size_t plane = 0; plane < N * C; ++plane) {
    const std::size_t base = plane * H * W;
    for (std::size_t i = 0; i < Ho; ++i) {
      for (std::size_t j = 0; j < Wo; ++j, ++k) {
        const std::size_t cand[4] = {base + 2 * i * W + 2 * j, base + 2 * i * W + 2 * j + 1,
                                     base + (2 * i + 1) * W + 2 * j, base + (2 * i + 1) * W + 2 * j + 1};
        std::size_t best = cand[0];
        for (int c = 1; c < 4; ++c) {
          if (x[cand[c]] > x[best]) best = cand[c];
        }
        out[k] = x[best];
        argmax[k] = static_cast<std::uint32_t>(best);
      }
    }
  }
  return make_result<T>("max_pool2d", std::move(out), {input}, [argmax = std::move(argmax)](Node<T>& self) {
    Tensor<T>& gx = self.inputs[0]->ensure_grad();
    for (std::size_t k = 0; k < argmax.size(); ++k) gx[argmax[k]] += self.grad[k];
  });
}

template <class T>
Var<T> transpose_conv2d(const Var<T>& input, const Var<T>& weight, const Var<T>& bias) {
  require_rank4(input.shape(), "transpose_conv2d");
  const std::size_t N = input.shape()[0], C = input.shape()[1], H = input.shape()[2], W = input.shape()[3];
  const Shape& ws = weight.shape();
  if (ws.size() != 4 || ws[2] != 2 || ws[3] != 2) {
    throw ShapeError("transpose_conv2d weight must be [in,out,2,2], got " + shape_str(ws));
  }
  if (ws[0] != C) {
    throw ShapeError("transpose_conv2d channel mismatch: input has " + std::to_string(C) + ", weight expects " +
                     std::to_string(ws[0]));
  }
  const std::size_t O = ws[1];
  if (bias.shape() != Shape{O}) throw ShapeError("transpose_conv2d bias must be [" + std::to_string(O) + "]");
  const std::size_t P = H * W, Q = O * 4;
  Tensor<T> out(Shape{N, O, 2 * H, 2 * W});
  RowMat<T> y(Q, P);
  ConstMapMat<T> wmat(weight.value().ptr(), C, Q);
  for (std::size_t n = 0; n < N; ++n) {
    y.noalias() = wmat.transpose() * ConstMapMat<T>(input.value().ptr() + n * C * P, C, P);
    T* dst = out.ptr() + n * O * 4 * P;
    for (std::size_t o = 0; o < O; ++o) {
      const T b = bias.value()[o];
      for (std::size_t a = 0; a < 2; ++a) {
        for (std::size_t c = 0; c < 2; ++c) {
          const T* src = y.data() + (o * 4 + a * 2 + c) * P;
          for (std::size_t i = 0; i < H; ++i) {
            T* row = dst + (o * 2 * H + 2 * i + a) * 2 * W + c;
            for (std::size_t j = 0; j < W; ++j) row[2 * j] = src[i * W + j] + b;
          }
        }
      }
    }
  }
  return make_result<T>("transpose_conv2d", std::move(out), {input, weight, bias},
                        [N, C, H, W, O](Node<T>& self) {
    Node<T>& nx = *self.inputs[0];
    Node<T>& nw = *self.inputs[1];
    Node<T>& nb = *self.inputs[2];
    const std::size_t P = H * W, Q = O * 4;
    RowMat<T> dy(Q, P);
    if (nw.requires_grad) nw.ensure_grad();
    if (nx.requires_grad) nx.ensure_grad();
    if (nb.requires_grad) nb.ensure_grad();
    ConstMapMat<T> wmat(nw.value.ptr(), C, Q);
    for (std::size_t n = 0; n < N; ++n) {
      const T* g = self.grad.ptr() + n * O * 4 * P;
      for (std::size_t o = 0; o < O; ++o) {
        double bsum = 0.0;
        for (std::size_t a = 0; a < 2; ++a) {
          for (std::size_t c = 0; c < 2; ++c) {
            T* d = dy.data() + (o * 4 + a * 2 + c) * P;
            for (std::size_t i = 0; i < H; ++i) {
              const T* row = g + (o * 2 * H + 2 * i + a) * 2 * W + c;
              for (std::size_t j = 0; j < W; ++j) {
                d[i * W + j] = row[2 * j];
                bsum += row[2 * j];
              }
            }
          }
        }
        if (nb.requires_grad) nb.grad[o] += static_cast<T>(bsum);
      }
      ConstMapMat<T> xin(nx.value.ptr() + n * C * P, C, P);
      if (nw.requires_grad) MapMat<T>(nw.grad.ptr(), C, Q).noalias() += xin * dy.transpose();
      if (nx.requires_grad) MapMat<T>(nx.grad.ptr() + n * C * P, C, P).noalias() += wmat * dy;
    }
  });
}

template <class T>
Var<T> transpose_conv2d(const Var<T>& input, const TransposeConvSpec<T>& spec) {
  if (spec.in_channels % 2 != 0) {
    throw ShapeError("transpose conv needs an even channel count, got " + std::to_string(spec.in_channels));
  }
  if (spec.out_channels != spec.in_channels / 2) {
    throw ShapeError("transpose conv must halve channels: " + std::to_string(spec.in_channels) + " -> " +
                     std::to_string(spec.out_channels));
  }
  if (input.shape().size() == 4 && input.shape()[1] != spec.in_channels) {
    throw ShapeError("transpose conv expects " + std::to_string(spec.in_channels) + " input channels, got " +
                     std::to_string(input.shape()[1]));
  }
  return transpose_conv2d(input, spec.weight, spec.bias);
}

template <class T>
Var<T> concat_channels(const Var<T>& a, const Var<T>& b) {
  require_rank4(a.shape(), "concat_channels");
  require_rank4(b.shape(), "concat_channels");
  const Shape& sa = a.shape();
  const Shape& sb = b.shape();
  if (sa[0] != sb[0] || sa[2] != sb[2] || sa[3] != sb[3]) {
    throw ShapeError("concat_channels mismatch " + shape_str(sa) + " vs " + shape_str(sb));
  }
  const std::size_t N = sa[0], C1 = sa[1], C2 = sb[1], P = sa[2] * sa[3];
  Tensor<T> out(Shape{N, C1 + C2, sa[2], sa[3]});
  for (std::size_t n = 0; n < N; ++n) {
    T* dst = out.ptr() + n * (C1 + C2) * P;
    std::copy_n(a.value().ptr() + n * C1 * P, C1 * P, dst);
    std::copy_n(b.value().ptr() + n * C2 * P, C2 * P, dst + C1 * P);
  }
  return make_result<T>("concat_channels", std::move(out), {a, b}, [N, C1, C2, P](Node<T>& self) {
    Node<T>& na = *self.inputs[0];
    Node<T>& nb = *self.inputs[1];
    for (std::size_t n = 0; n < N; ++n) {
      const T* g = self.grad.ptr() + n * (C1 + C2) * P;
      if (na.requires_grad) {
        T* ga = na.ensure_grad().ptr() + n * C1 * P;
        for (std::size_t i = 0; i < C1 * P; ++i) ga[i] += g[i];
      }
      if (nb.requires_grad) {
        T* gb = nb.ensure_grad().ptr() + n * C2 * P;
        for (std::size_t i = 0; i < C2 * P; ++i) gb[i] += g[C1 * P + i];
      }
    }
  });
}

template <class T>
Var<T> activation(Activation kind, const Var<T>& input) {
  const Tensor<T>& x = input.value();
  Tensor<T> out(x.shape());
  if (kind == Activation::relu) {
    for (std::size_t i = 0; i < x.numel(); ++i) out[i] = x[i] > T(0) ? x[i] : T(0);
    return make_result<T>("relu", std::move(out), {input}, [](Node<T>& self) {
      Node<T>& nx = *self.inputs[0];
      Tensor<T>& gx = nx.ensure_grad();
      for (std::size_t i = 0; i < gx.numel(); ++i) {
        if (nx.value[i] > T(0)) gx[i] += self.grad[i];
      }
    });
  }
  const T lo = std::numeric_limits<T>::min();
  const T hi = std::nextafter(T(1), T(0));
  for (std::size_t i = 0; i < x.numel(); ++i) {
    const double v = x[i];
    const double s = v >= 0.0 ? 1.0 / (1.0 + std::exp(-v)) : std::exp(v) / (1.0 + std::exp(v));
    out[i] = std::clamp(static_cast<T>(s), lo, hi);
  }
  return make_result<T>("sigmoid", std::move(out), {input}, [](Node<T>& self) {
    Tensor<T>& gx = self.inputs[0]->ensure_grad();
    for (std::size_t i = 0; i < gx.numel(); ++i) {
      const T s = self.value[i];
      gx[i] += self.grad[i] * s * (T(1) - s);
    }
  });
}

#define SGC_INSTANTIATE_NN(T)                                                          \
  template Var<T> conv2d<T>(const Var<T>&, const Var<T>&, const Var<T>&);             \
  template Var<T> conv2d<T>(const Var<T>&, const ConvSpec<T>&);                       \
  template Var<T> max_pool2d<T>(const Var<T>&, const PoolSpec&);                      \
  template Var<T> transpose_conv2d<T>(const Var<T>&, const Var<T>&, const Var<T>&);   \
  template Var<T> transpose_conv2d<T>(const Var<T>&, const TransposeConvSpec<T>&);    \
  template Var<T> concat_channels<T>(const Var<T>&, const Var<T>&);                   \
  template Var<T> activation<T>(Activation, const Var<T>&);

SGC_INSTANTIATE_NN(float)
SGC_INSTANTIATE_NN(double)

}  // namespace sgc::nn
