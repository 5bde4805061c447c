/* Copyright 2026 The HatCL Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#include <cmath>
#include <random>

#include "doctest.h"
#include "doctest_tensor.hpp"
#include "gradcheck.hpp"
#include "hatcl/autograd.hpp"
#include "hatcl/errors.hpp"

using namespace hatcl;
using hatcl::testing::max_relative_error;
using hatcl::testing::random_away_from_zero;
using hatcl::testing::random_tensor;
using hatcl::testing::weighted_sum;

namespace {

constexpr int kCases = 20;
constexpr double kTol = 1e-4;

}  // namespace

TEST_CASE("tensor construction validates shapes") {
  CHECK_THROWS_AS(Tensor(Shape{2, 0}), DimensionError);
  CHECK_THROWS_AS(Tensor(Shape{2, 2}, std::vector<double>{1, 2, 3}), DimensionError);
  const Tensor m = Tensor::matrix({{1, 2}, {3, 4}});
  CHECK(m.shape() == Shape{2, 2});
  CHECK(m.at({1, 0}) == 3);
}

TEST_CASE("matmul examples") {
  Tape tape;
  Var id = tape.constant(Tensor::matrix({{1, 0}, {0, 1}}));
  Var a = tape.constant(Tensor::matrix({{1, 2}, {3, 4}}));
  CHECK(matmul(id, a).value() == a.value());
  Var col = tape.constant(Tensor::matrix({{5}, {6}}));
  CHECK(matmul(a, col).value() == Tensor::matrix({{17}, {39}}));
  CHECK_THROWS_AS(matmul(col, col), DimensionError);
}

TEST_CASE("matmul backward of sum(A B)") {
  Tape tape;
  Var a = tape.variable(Tensor::matrix({{1, 2}}));
  Var b = tape.variable(Tensor::matrix({{3}, {4}}));
  tape.backward(sum(matmul(a, b)));
  CHECK(a.grad() == Tensor::matrix({{3, 4}}));
  CHECK(b.grad() == Tensor::matrix({{1}, {2}}));
}

TEST_CASE("elementwise examples") {
  Tape tape;
  Var z = tape.variable(Tensor::scalar(0.0));
  Var s = sigmoid(z);
  CHECK(s.value().item() == 0.5);
  tape.backward(s);
  CHECK(z.grad().item() == 0.25);

  Tape t2;
  Var x = t2.variable(Tensor::scalar(7.0));
  Var c = clamp(x, -6.0, 6.0);
  CHECK(c.value().item() == 6.0);
  t2.backward(c);
  CHECK(x.grad().item() == 0.0);

  Tape t3;
  Var r = relu(t3.constant(Tensor::vector({-3.0, 2.0})));
  CHECK(r.value() == Tensor::vector({0.0, 2.0}));

  Tape t4;
  CHECK_THROWS_AS(add(t4.constant(Tensor({2, 3})), t4.constant(Tensor({3, 2}))),
                  DimensionError);
}

TEST_CASE("conv2d examples") {
  Tape tape;
  Var x = tape.constant(Tensor({1, 1, 2, 2}, {1, 2, 3, 4}));
  Var ones = tape.constant(Tensor({1, 1, 2, 2}, 1.0));
  CHECK(conv2d(x, ones, std::nullopt).value() == Tensor({1, 1, 1, 1}, {10}));

  Var unit = tape.constant(Tensor({1, 1, 1, 1}, 1.0));
  Var zero = tape.constant(Tensor({1}, 0.0));
  CHECK(conv2d(x, unit, zero).value() == x.value());

  Var big = tape.constant(Tensor({1, 1, 3, 3}, 1.0));
  CHECK_THROWS_AS(conv2d(x, big, std::nullopt), DimensionError);
  CHECK_NOTHROW(conv2d(x, big, std::nullopt, {1, 1}));
}

TEST_CASE("reduction and loss examples") {
  Tape tape;
  CHECK(mean(tape.constant(Tensor::vector({2, 4, 6}))).value().item() == 4.0);
  for (std::size_t classes : {2u, 3u, 10u}) {
    Var logits = tape.constant(Tensor({4, classes}, 0.3));
    const std::vector<int> labels{0, 1, 0, 1};
    CHECK(softmax_cross_entropy(logits, labels).value().item() ==
          doctest::Approx(std::log(static_cast<double>(classes))).epsilon(1e-12));
  }
  Var logits = tape.constant(Tensor({1, 2}));
  const std::vector<int> bad{2};
  CHECK_THROWS_AS(softmax_cross_entropy(logits, bad), ValidationError);
}

TEST_CASE("cross-entropy gradient is softmax minus one-hot over the batch") {
  std::mt19937_64 rng(3);
  const Tensor z = random_tensor({3, 4}, rng, -2, 2);
  const std::vector<int> labels{2, 0, 3};
  Tape tape;
  Var logits = tape.variable(z);
  tape.backward(softmax_cross_entropy(logits, labels));
  for (std::size_t b = 0; b < 3; ++b) {
    double norm = 0.0;
    for (std::size_t c = 0; c < 4; ++c) norm += std::exp(z.at({b, c}));
    for (std::size_t c = 0; c < 4; ++c) {
      const double expected =
          (std::exp(z.at({b, c})) / norm - (static_cast<int>(c) == labels[b])) / 3.0;
      CHECK(logits.grad().at({b, c}) == doctest::Approx(expected).epsilon(1e-12));
    }
  }
}

TEST_CASE("backward semantics and errors") {
  Tape tape;
  Var x = tape.variable(Tensor::scalar(3.0));
  tape.backward(mul(x, x));
  CHECK(x.grad().item() == 6.0);
  CHECK_THROWS_AS(tape.backward(mul(x, x)), StateError);
  tape.reset();
  Var v = tape.variable(Tensor::vector({1, 2}));
  CHECK_THROWS_AS(tape.backward(v), UsageError);
  CHECK_THROWS_AS(tape.register_hook(Var(&tape, 99), [](const Tensor& g) { return g; }),
                  UsageError);
}

TEST_CASE("parameters accumulate across tapes until zeroed") {
  Parameter p("w", Tensor::vector({1.0, 2.0}));
  for (int i = 0; i < 2; ++i) {
    Tape tape;
    tape.backward(sum(scale(tape.parameter(p), 3.0)));
  }
  CHECK(p.grad() == Tensor::vector({6.0, 6.0}));
  p.zero_grad();
  CHECK(p.grad() == Tensor::vector({0.0, 0.0}));
}

TEST_CASE("hooks") {
  auto run = [](const std::vector<double>& factors, bool remove_first) {
    Tape tape;
    Var x = tape.variable(Tensor::vector({1.0, -2.0}));
    Var y = mul(x, x);
    std::vector<HookHandle> handles;
    for (double f : factors) {
      handles.push_back(tape.register_hook(y, [f](const Tensor& g) {
        Tensor out = g;
        for (double& v : out.data()) v *= f;
        return out;
      }));
    }
    if (remove_first && !handles.empty()) tape.remove_hook(handles.front());
    tape.backward(sum(y));
    return x.grad();
  };
  const Tensor plain = run({}, false);
  CHECK(plain == Tensor::vector({2.0, -4.0}));
  CHECK(run({0.0}, false) == Tensor::vector({0.0, 0.0}));
  CHECK(run({1.0}, false) == plain);
  CHECK(run({2.0, 3.0}, false) == Tensor::vector({12.0, -24.0}));
  CHECK(run({5.0}, true) == plain);
}

TEST_CASE("hooks fire in registration order before the slot is written") {
  Tape tape;
  Var x = tape.variable(Tensor::scalar(1.0));
  Var y = scale(x, 2.0);
  std::vector<int> order;
  tape.register_hook(y, [&](const Tensor& g) { order.push_back(1); return g; });
  tape.register_hook(y, [&](const Tensor& g) {
    order.push_back(2);
    Tensor out = g;
    out[0] += 10.0;
    return out;
  });
  tape.backward(y);
  CHECK(order == std::vector<int>{1, 2});
  CHECK(y.grad().item() == 11.0);
  CHECK(x.grad().item() == 22.0);
}

TEST_CASE("mul broadcasts a rank-1 operand over axis 1") {
  Tape tape;
  Var x = tape.variable(Tensor({2, 3, 2}, {1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12}));
  Var a = tape.variable(Tensor::vector({1, 0, 2}));
  Var y = mul(x, a);
  CHECK(y.value() == Tensor({2, 3, 2}, {1, 2, 0, 0, 10, 12, 7, 8, 0, 0, 22, 24}));
  tape.backward(sum(y));
  CHECK(a.grad() == Tensor::vector({1 + 2 + 7 + 8, 3 + 4 + 9 + 10, 5 + 6 + 11 + 12}));
}

TEST_CASE("identical graphs give bit-identical gradients") {
  auto grads = [] {
    std::mt19937_64 rng(11);
    Tape tape;
    Var x = tape.variable(random_tensor({4, 3}, rng));
    Var w = tape.variable(random_tensor({3, 2}, rng));
    tape.backward(mean(sigmoid(matmul(x, w))));
    return std::make_pair(x.grad(), w.grad());
  };
  CHECK(grads() == grads());
}

// Finite-difference properties. Each case draws fresh shapes and values.

TEST_CASE("gradcheck: matmul, transpose, reshape, permute") {
  for (int seed = 0; seed < kCases; ++seed) {
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<std::size_t> d(1, 4);
    const std::size_t m = d(rng), k = d(rng), n = d(rng);
    CHECK(max_relative_error(
              [](Tape& t, const std::vector<Var>& v) {
                return weighted_sum(t, matmul(v[0], v[1]));
              },
              {random_tensor({m, k}, rng), random_tensor({k, n}, rng)}) < kTol);
    CHECK(max_relative_error(
              [n, m](Tape& t, const std::vector<Var>& v) {
                return weighted_sum(t, reshape(transpose(v[0]), {n * m}));
              },
              {random_tensor({m, n}, rng)}) < kTol);
    CHECK(max_relative_error(
              [](Tape& t, const std::vector<Var>& v) {
                return weighted_sum(t, permute(v[0], {2, 0, 1}));
              },
              {random_tensor({m, k, n}, rng)}) < kTol);
  }
}

TEST_CASE("gradcheck: elementwise") {
  for (int seed = 0; seed < kCases; ++seed) {
    std::mt19937_64 rng(100 + seed);
    std::uniform_int_distribution<std::size_t> d(1, 5);
    const Shape s{d(rng), d(rng)};
    const Tensor a = random_tensor(s, rng, -2, 2), b = random_tensor(s, rng, -2, 2);
    auto check2 = [&](auto op) {
      CHECK(max_relative_error(
                [op](Tape& t, const std::vector<Var>& v) {
                  return weighted_sum(t, op(v[0], v[1]));
                },
                {a, b}) < kTol);
    };
    check2([](Var x, Var y) { return add(x, y); });
    check2([](Var x, Var y) { return sub(x, y); });
    check2([](Var x, Var y) { return mul(x, y); });
    CHECK(max_relative_error(
              [](Tape& t, const std::vector<Var>& v) {
                return weighted_sum(t, mul(v[0], v[1]));
              },
              {a, random_tensor({s[1]}, rng)}) < kTol);
    auto check1 = [&](auto op, const Tensor& x) {
      CHECK(max_relative_error(
                [op](Tape& t, const std::vector<Var>& v) {
                  return weighted_sum(t, op(v[0]));
                },
                {x}) < kTol);
    };
    check1([](Var x) { return scale(x, -1.7); }, a);
    check1([](Var x) { return shift(x, 0.4); }, a);
    check1([](Var x) { return sigmoid(x); }, a);
    check1([](Var x) { return relu(x); }, random_away_from_zero(s, rng));
    // Stay away from the clamp bounds as well.
    Tensor c = random_away_from_zero(s, rng, 0.05, 2.0);
    for (double& v : c.data()) v = (std::abs(std::abs(v) - 1.0) < 0.05) ? v * 0.5 : v;
    check1([](Var x) { return clamp(x, -1.0, 1.0); }, c);
  }
}

TEST_CASE("gradcheck: conv2d") {
  for (int seed = 0; seed < kCases; ++seed) {
    std::mt19937_64 rng(200 + seed);
    std::uniform_int_distribution<std::size_t> d(1, 3);
    const std::size_t n = d(rng), cin = d(rng), cout = d(rng), k = d(rng);
    const Conv2dOptions opt{d(rng), d(rng) - 1};
    const std::size_t hw = k + d(rng);
    const bool with_bias = seed % 2 == 0;
    std::vector<Tensor> in{random_tensor({n, cin, hw, hw}, rng),
                           random_tensor({cout, cin, k, k}, rng)};
    if (with_bias) in.push_back(random_tensor({cout}, rng));
    CHECK(max_relative_error(
              [opt, with_bias](Tape& t, const std::vector<Var>& v) {
                std::optional<Var> bias;
                if (with_bias) bias = v[2];
                return weighted_sum(t, conv2d(v[0], v[1], bias, opt));
              },
              in) < kTol);
  }
  std::mt19937_64 rng(7);
  CHECK(max_relative_error(
            [](Tape& t, const std::vector<Var>& v) {
              return weighted_sum(t, conv2d(v[0], v[1], std::nullopt));
            },
            {random_tensor({1, 1, 4, 4}, rng), random_tensor({1, 1, 2, 2}, rng)}) < 1e-5);
}

TEST_CASE("gradcheck: reductions, loss and standardization") {
  for (int seed = 0; seed < kCases; ++seed) {
    std::mt19937_64 rng(300 + seed);
    std::uniform_int_distribution<std::size_t> d(2, 5);
    const std::size_t b = d(rng), c = d(rng);
    const Tensor x = random_tensor({b, c}, rng, -3, 3);
    CHECK(max_relative_error(
              [](Tape&, const std::vector<Var>& v) { return sum(sigmoid(v[0])); },
              {x}) < kTol);
    CHECK(max_relative_error(
              [](Tape&, const std::vector<Var>& v) { return mean(mul(v[0], v[0])); },
              {x}) < kTol);
    std::vector<int> labels(b);
    std::uniform_int_distribution<int> pick(0, static_cast<int>(c) - 1);
    for (int& l : labels) l = pick(rng);
    CHECK(max_relative_error(
              [labels](Tape&, const std::vector<Var>& v) {
                return softmax_cross_entropy(v[0], labels);
              },
              {x}) < kTol);
    const Tensor img = random_tensor({b, c, 2, 3}, rng, -2, 2);
    for (NormAxes axes : {NormAxes::kPerSample, NormAxes::kPerChannel}) {
      CHECK(max_relative_error(
                [axes](Tape& t, const std::vector<Var>& v) {
                  return weighted_sum(t, standardize(v[0], axes, 1e-5));
                },
                {img}) < kTol);
      CHECK(max_relative_error(
                [axes](Tape& t, const std::vector<Var>& v) {
                  return weighted_sum(t, standardize(v[0], axes, 1e-5));
                },
                {x}) < kTol);
    }
  }
}
