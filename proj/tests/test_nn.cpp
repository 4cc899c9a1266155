#include <doctest.h>

#include <random>

#include "errors.hpp"
#include "nn.hpp"
#include "oracles.hpp"

using namespace sgc;
using namespace sgc::ad;
using namespace sgc::nn;

namespace {

Var<double> constant(Shape s, std::vector<double> v) { return Var<double>::constant(Tensor<double>(std::move(s), std::move(v))); }

// Direct zero-padded cross-correlation.
Tensor<double> conv_reference(const Tensor<double>& x, const Tensor<double>& w, const Tensor<double>& b) {
  const std::size_t N = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
  const std::size_t O = w.dim(0), KH = w.dim(2), KW = w.dim(3);
  Tensor<double> y({N, O, H, W});
  for (std::size_t n = 0; n < N; ++n)
    for (std::size_t o = 0; o < O; ++o)
      for (std::size_t r = 0; r < H; ++r)
        for (std::size_t c = 0; c < W; ++c) {
          double s = b[o];
          for (std::size_t ch = 0; ch < C; ++ch)
            for (std::size_t i = 0; i < KH; ++i)
              for (std::size_t j = 0; j < KW; ++j) {
                const long rr = long(r + i) - long(KH / 2), cc = long(c + j) - long(KW / 2);
                if (rr < 0 || cc < 0 || rr >= long(H) || cc >= long(W)) continue;
                s += w[((o * C + ch) * KH + i) * KW + j] * x[((n * C + ch) * H + rr) * W + cc];
              }
          y[((n * O + o) * H + r) * W + c] = s;
        }
  return y;
}

}  // namespace

TEST_CASE("1x1 identity kernel reproduces the input") {
  std::mt19937_64 rng(1);
  const auto x = oracle::random_tensor({1, 1, 5, 4}, rng);
  const auto y = conv2d(Var<double>::constant(x), constant({1, 1, 1, 1}, {1.0}), constant({1}, {0.0}));
  CHECK(y.value() == x);
}

TEST_CASE("3x3 ones kernel on a constant input: 9c inside, 4c at corners, 6c on edges") {
  const double c = 0.5;
  const auto x = Var<double>::constant(Tensor<double>({1, 1, 4, 4}, c));
  const auto y = conv2d(x, Var<double>::constant(Tensor<double>({1, 1, 3, 3}, 1.0)), constant({1}, {0.0}));
  CHECK(y.value()[1 * 4 + 1] == 9 * c);
  CHECK(y.value()[0] == 4 * c);
  CHECK(y.value()[15] == 4 * c);
  CHECK(y.value()[1] == 6 * c);
}

TEST_CASE("conv2d matches a direct loop reference") {
  std::mt19937_64 rng(2);
  const auto x = oracle::random_tensor({2, 3, 5, 6}, rng);
  const auto w = oracle::random_tensor({4, 3, 3, 3}, rng);
  const auto b = oracle::random_tensor({4}, rng);
  const auto y = conv2d(Var<double>::constant(x), Var<double>::constant(w), Var<double>::constant(b));
  const auto ref = conv_reference(x, w, b);
  REQUIRE(y.shape() == ref.shape());
  for (std::size_t i = 0; i < ref.numel(); ++i) CHECK(y.value()[i] == doctest::Approx(ref[i]).epsilon(1e-12));
}

TEST_CASE("conv2d shape errors") {
  const auto x = Var<double>::constant(Tensor<double>({1, 2, 4, 4}));
  CHECK_THROWS_AS(conv2d(x, Var<double>::constant(Tensor<double>({1, 3, 3, 3})), constant({1}, {0})), ShapeError);
  CHECK_THROWS_AS(conv2d(x, Var<double>::constant(Tensor<double>({1, 2, 2, 2})), constant({1}, {0})), ShapeError);
  CHECK_THROWS_AS(conv2d(Var<double>::constant(Tensor<double>({2, 4, 4})),
                         Var<double>::constant(Tensor<double>({1, 2, 3, 3})), constant({1}, {0})),
                  ShapeError);
}

TEST_CASE("conv2d gradients match finite differences") {
  std::mt19937_64 rng(3);
  const auto r = oracle::check_gradients(
      [](const std::vector<Var<double>>& v) { return sum(mul(conv2d(v[0], v[1], v[2]), v[3])); },
      {oracle::random_tensor({1, 3, 6, 6}, rng), oracle::random_tensor({2, 3, 3, 3}, rng),
       oracle::random_tensor({2}, rng), oracle::random_tensor({1, 2, 6, 6}, rng)});
  CHECK(r.rel_error < 1e-4);
}

TEST_CASE("max_pool2d picks the window maximum with first-in-row-major ties") {
  const auto y = max_pool2d(constant({1, 1, 2, 2}, {1, 2, 3, 4}));
  CHECK(y.value().item() == 4.0);

  auto x = Var<double>::leaf(Tensor<double>({1, 1, 2, 2}, 0.7), true);
  backward(sum(max_pool2d(x)));
  CHECK(x.grad()[0] == 1.0);
  CHECK(x.grad()[1] == 0.0);
  CHECK(x.grad()[2] == 0.0);
  CHECK(x.grad()[3] == 0.0);

  CHECK(max_pool2d(Var<float>::constant(Tensor<float>({1, 1, 128, 128}))).shape() == Shape{1, 1, 64, 64});
  CHECK_THROWS_AS(max_pool2d(Var<double>::constant(Tensor<double>({1, 1, 3, 4}))), ShapeError);
}

TEST_CASE("max_pool2d gradients match finite differences") {
  // A permutation of well separated values keeps every window's argmax stable under h.
  std::vector<double> vals(48);
  for (std::size_t i = 0; i < vals.size(); ++i) vals[i] = 0.05 * static_cast<double>(i);
  std::shuffle(vals.begin(), vals.end(), std::mt19937_64(4));
  std::mt19937_64 rng(5);
  const auto r = oracle::check_gradients(
      [](const std::vector<Var<double>>& v) { return sum(mul(max_pool2d(v[0]), v[1])); },
      {Tensor<double>({1, 3, 4, 4}, vals), oracle::random_tensor({1, 3, 2, 2}, rng)});
  CHECK(r.rel_error < 1e-4);
}

TEST_CASE("transpose conv spreads a single pixel over a 2x2 block") {
  const double v = 0.3;
  const auto y = transpose_conv2d(constant({1, 1, 1, 1}, {1.0}), Var<double>::constant(Tensor<double>({1, 1, 2, 2}, v)),
                                  constant({1}, {0.0}));
  REQUIRE(y.shape() == Shape{1, 1, 2, 2});
  for (double e : y.value().data()) CHECK(e == v);

  TransposeConvSpec<float> spec{64, 32, Var<float>::constant(Tensor<float>({64, 32, 2, 2})),
                                Var<float>::constant(Tensor<float>({32}))};
  CHECK(transpose_conv2d(Var<float>::constant(Tensor<float>({1, 64, 8, 8})), spec).shape() == Shape{1, 32, 16, 16});
}

TEST_CASE("transpose conv gradients match finite differences") {
  std::mt19937_64 rng(6);
  const auto r = oracle::check_gradients(
      [](const std::vector<Var<double>>& v) { return sum(mul(transpose_conv2d(v[0], v[1], v[2]), v[3])); },
      {oracle::random_tensor({1, 4, 2, 2}, rng), oracle::random_tensor({4, 2, 2, 2}, rng),
       oracle::random_tensor({2}, rng), oracle::random_tensor({1, 2, 4, 4}, rng)});
  CHECK(r.rel_error < 1e-4);
}

TEST_CASE("channel concat stacks inputs and routes gradients back") {
  std::mt19937_64 rng(7);
  auto a = Var<double>::leaf(oracle::random_tensor({2, 2, 3, 3}, rng), true);
  auto b = Var<double>::leaf(oracle::random_tensor({2, 3, 3, 3}, rng), true);
  const auto c = concat_channels(a, b);
  REQUIRE(c.shape() == Shape{2, 5, 3, 3});
  for (std::size_t n = 0; n < 2; ++n) {
    for (std::size_t i = 0; i < 18; ++i) CHECK(c.value()[n * 45 + i] == a.value()[n * 18 + i]);
    for (std::size_t i = 0; i < 27; ++i) CHECK(c.value()[n * 45 + 18 + i] == b.value()[n * 27 + i]);
  }
  backward(sum(c));
  for (double g : a.grad().data()) CHECK(g == 1.0);
  CHECK_THROWS_AS(concat_channels(a, Var<double>::constant(Tensor<double>({2, 3, 2, 3}))), ShapeError);
}

TEST_CASE("activations") {
  const auto r = relu(constant({2}, {-1.0, 2.0}));
  CHECK(r.value()[0] == 0.0);
  CHECK(r.value()[1] == 2.0);
  auto x = Var<double>::leaf(Tensor<double>({1}, 0.0), true);
  const auto s = sigmoid(x);
  CHECK(s.value()[0] == 0.5);
  backward(sum(s));
  CHECK(x.grad()[0] == 0.25);

  std::vector<float> sweep;
  for (int i = -500; i <= 500; ++i) sweep.push_back(0.1f * static_cast<float>(i));
  const auto y = sigmoid(Var<float>::constant(Tensor<float>({sweep.size()}, sweep)));
  for (float v : y.value().data()) {
    CHECK(v > 0.0f);
    CHECK(v < 1.0f);
  }
}

TEST_CASE("activation gradients match finite differences") {
  std::mt19937_64 rng(8);
  auto x = oracle::random_tensor({4, 4, 3}, rng, 0.1, 1.0);
  for (std::size_t i = 0; i < x.numel(); i += 3) x[i] = -x[i];
  for (auto kind : {Activation::relu, Activation::sigmoid}) {
    const auto r = oracle::check_gradients(
        [kind](const std::vector<Var<double>>& v) { return sum(mul(activation(kind, v[0]), v[0])); }, {x});
    CHECK(r.rel_error < 1e-4);
  }
}
