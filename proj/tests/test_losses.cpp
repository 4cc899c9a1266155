#include <doctest.h>

#include <cmath>
#include <random>

#include "errors.hpp"
#include "losses.hpp"
#include "oracles.hpp"

using namespace sgc;
using namespace sgc::ad;

namespace {

Var<double> vec(std::vector<double> v) {
  const std::size_t n = v.size();
  return Var<double>::constant(Tensor<double>({n}, std::move(v)));
}

double value(LossKind k, std::vector<double> p, std::vector<double> y) {
  return loss_value(k, vec(std::move(p)), vec(std::move(y))).value().item();
}

// Binary entropy, the smallest value bce can take for target y.
double entropy(double y) { return -(y * std::log(y) + (1 - y) * std::log(1 - y)); }

}  // namespace

TEST_CASE("names round trip") {
  for (LossKind k : kAllLosses) CHECK(parse_loss(loss_name(k)) == k);
  CHECK_THROWS_AS(parse_loss("huber"), ConfigError);
}

TEST_CASE("worked examples") {
  CHECK(value(LossKind::mse, {1, 2}, {1, 4}) == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(value(LossKind::mae, {1, 2}, {1, 4}) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(value(LossKind::mape, {1, 2}, {1, 4}) == doctest::Approx(0.25).epsilon(1e-12));
  CHECK(std::fabs(value(LossKind::binary_cross_entropy, {0.5, 0.5, 0.5, 0.5}, {0, 1, 1, 0}) - std::log(2.0)) < 1e-12);
}

TEST_CASE("bce at pred == target equals the binary entropy of the target") {
  for (double y : {0.001, 0.2, 0.999}) {
    CHECK(value(LossKind::binary_cross_entropy, {y}, {y}) == doctest::Approx(entropy(y)).epsilon(1e-9));
    const auto g = loss_gradient(LossKind::binary_cross_entropy, Tensor<double>({1}, y), Tensor<double>({1}, y));
    CHECK(std::fabs(g[0]) < 1e-9);
  }
  // Hard targets reach zero up to the probability clamp.
  CHECK(value(LossKind::binary_cross_entropy, {0.0, 1.0}, {0.0, 1.0}) < 1e-6);
}

TEST_CASE("cross-entropy needs targets in [0, 1]") {
  CHECK_THROWS_AS(value(LossKind::binary_cross_entropy, {0.5}, {1.5}), DomainError);
  CHECK_THROWS_AS(value(LossKind::categorical_cross_entropy, {0.5}, {-0.1}), DomainError);
  CHECK_NOTHROW(value(LossKind::mse, {0.5}, {1.5}));
  CHECK_THROWS_AS(value(LossKind::mse, {0.5, 0.1}, {1.5}), ShapeError);
}

TEST_CASE("clamped probabilities keep losses finite") {
  CHECK(std::isfinite(value(LossKind::binary_cross_entropy, {0.0, 1.0}, {1.0, 0.0})));
  CHECK(value(LossKind::categorical_cross_entropy, {0.0}, {1.0}) == doctest::Approx(-std::log(1e-7)));
  CHECK(std::isfinite(value(LossKind::mape, {0.5}, {0.0})));
}

TEST_CASE("closed-form gradients") {
  const auto g = loss_gradient(LossKind::mse, Tensor<double>({1}, 2.0), Tensor<double>({1}, 1.0));
  CHECK(g[0] == 2.0);
  const auto z = loss_gradient(LossKind::mse, Tensor<double>({3}, 0.4), Tensor<double>({3}, 0.4));
  for (double v : z.data()) CHECK(v == 0.0);
}

TEST_CASE("both gradient routes agree with finite differences for every loss") {
  std::mt19937_64 rng(21);
  const Shape s{4, 4, 3};
  const auto pred = oracle::random_tensor(s, rng, 0.05, 0.95);
  auto target = oracle::random_tensor(s, rng, 0.05, 0.95);
  // keep |p - y| well clear of the mae/mape kink
  for (std::size_t i = 0; i < target.numel(); ++i) {
    if (std::fabs(target[i] - pred[i]) < 0.01) target[i] = pred[i] > 0.5 ? pred[i] - 0.1 : pred[i] + 0.1;
  }
  for (LossKind k : kAllLosses) {
    CAPTURE(loss_name(k));
    const auto r = oracle::check_gradients(
        [&](const std::vector<Var<double>>& v) { return loss_value(k, v[0], Var<double>::constant(target)); }, {pred});
    CHECK(r.rel_error < 1e-4);

    auto p = Var<double>::leaf(pred, true);
    backward(loss_value(k, p, Var<double>::constant(target)));
    const auto closed = loss_gradient(k, pred, target);
    double diff = 0, norm = 0;
    for (std::size_t i = 0; i < pred.numel(); ++i) {
      diff = std::max(diff, std::fabs(closed[i] - p.grad()[i]));
      norm = std::max(norm, std::fabs(closed[i]));
    }
    CHECK(diff <= 1e-12 * std::max(1.0, norm));
  }
}

TEST_CASE("float and double agree on values") {
  std::mt19937_64 rng(22);
  const auto p = oracle::random_tensor({64}, rng, 0.05, 0.95);
  const auto y = oracle::random_tensor({64}, rng, 0.05, 0.95);
  Tensor<float> pf({64}), yf({64});
  for (std::size_t i = 0; i < 64; ++i) pf[i] = static_cast<float>(p[i]), yf[i] = static_cast<float>(y[i]);
  for (LossKind k : kAllLosses) {
    const double d = loss_value(k, Var<double>::constant(p), Var<double>::constant(y)).value().item();
    const double f = loss_value(k, Var<float>::constant(pf), Var<float>::constant(yf)).value().item();
    CHECK(f == doctest::Approx(d).epsilon(1e-5));
  }
}
