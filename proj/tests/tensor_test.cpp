// Copyright 2026 The coldstart Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "coldstart/tensor.hpp"

#include <cmath>
#include <functional>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "coldstart/error.hpp"
#include "support/op_cases.hpp"

namespace coldstart::ad {
namespace {

using test_support::random_tensor;

TEST(Matmul, IdentityTimesX) {
  Tensor eye = Tensor::matrix(2, 2, {1, 0, 0, 1});
  Tensor x = Tensor::matrix(2, 3, {1, 2, 3, 4, 5, 6});
  Tensor y = matmul(eye, x);
  EXPECT_EQ(std::vector<double>(y.data().begin(), y.data().end()),
            std::vector<double>(x.data().begin(), x.data().end()));
}

TEST(Matmul, HandArithmetic) {
  Tensor y = matmul(Tensor::matrix(2, 2, {1, 2, 3, 4}), Tensor::matrix(2, 1, {1, 1}));
  EXPECT_EQ(y.shape(), (Shape{2, 1}));
  EXPECT_DOUBLE_EQ(y[0], 3.0);
  EXPECT_DOUBLE_EQ(y[1], 7.0);
}

TEST(Matmul, MatchesTripleLoop) {
  std::mt19937_64 rng(3);
  Tensor a = random_tensor(rng, {5, 4});
  Tensor b = random_tensor(rng, {4, 3});
  Tensor c = matmul(a, b);
  for (std::size_t i = 0; i < 5; ++i) {
    for (std::size_t j = 0; j < 3; ++j) {
      double acc = 0.0;
      for (std::size_t p = 0; p < 4; ++p) {
        acc += a.at(i, p) * b.at(p, j);
      }
      EXPECT_NEAR(c.at(i, j), acc, 1e-12);
    }
  }
}

TEST(Matmul, ShapeMismatchThrows) {
  try {
    matmul(Tensor::zeros({2, 3}), Tensor::zeros({2, 3}));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::kShapeMismatch);
  }
}

TEST(Softmax, ConstantRowIsUniform) {
  Tensor y = softmax(Tensor::matrix(1, 4, {2, 2, 2, 2}));
  for (double v : y.data()) {
    EXPECT_DOUBLE_EQ(v, 0.25);
  }
}

TEST(Softmax, ClosedForm) {
  Tensor y = softmax(Tensor::matrix(1, 2, {0.0, std::log(3.0)}));
  EXPECT_NEAR(y[0], 0.25, 1e-15);
  EXPECT_NEAR(y[1], 0.75, 1e-15);
}

TEST(Softmax, RandomRowsMatchDirectFormula) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    Tensor x = random_tensor(rng, {3, 7}, -20.0, 20.0);
    Tensor y = softmax(x, 1);
    for (std::size_t r = 0; r < 3; ++r) {
      double denom = 0.0;
      for (std::size_t j = 0; j < 7; ++j) {
        denom += std::exp(x.at(r, j));
      }
      double total = 0.0;
      for (std::size_t j = 0; j < 7; ++j) {
        EXPECT_GE(y.at(r, j), 0.0);
        EXPECT_NEAR(y.at(r, j), std::exp(x.at(r, j)) / denom, 1e-12);
        total += y.at(r, j);
      }
      EXPECT_NEAR(total, 1.0, 1e-12);
    }
    // Column-wise reduction too.
    Tensor yc = softmax(x, 0);
    for (std::size_t j = 0; j < 7; ++j) {
      double total = 0.0;
      for (std::size_t r = 0; r < 3; ++r) {
        total += yc.at(r, j);
      }
      EXPECT_NEAR(total, 1.0, 1e-12);
    }
  }
}

TEST(Softmax, MaskedPositionsGetZeroWeight) {
  Tensor y = softmax(causal_mask(Tensor::matrix(2, 2, {1.0, 5.0, 2.0, 3.0})));
  EXPECT_DOUBLE_EQ(y.at(0, 0), 1.0);
  EXPECT_DOUBLE_EQ(y.at(0, 1), 0.0);
  EXPECT_NEAR(y.at(1, 0) + y.at(1, 1), 1.0, 1e-15);
}

TEST(LayerNorm, ConstantVectorMapsToZero) {
  Tensor y = layer_norm(Tensor::matrix(1, 3, {4, 4, 4}), Tensor::vector({1, 1, 1}),
                        Tensor::vector({0, 0, 0}));
  for (double v : y.data()) {
    EXPECT_EQ(v, 0.0);
  }
}

TEST(LayerNorm, AlreadyStandardized) {
  Tensor y = layer_norm(Tensor::matrix(1, 2, {1, -1}), Tensor::vector({1, 1}),
                        Tensor::vector({0, 0}), 1e-14);
  EXPECT_NEAR(y[0], 1.0, 1e-12);
  EXPECT_NEAR(y[1], -1.0, 1e-12);
}

TEST(LayerNorm, MomentsOfRandomVector) {
  std::mt19937_64 rng(9);
  Tensor x = random_tensor(rng, {4, 16}, -10, 10);
  Tensor bias = random_tensor(rng, {16});
  // Unit gain: per-row mean of the output equals mean(bias).
  Tensor y = layer_norm(x, Tensor::full({16}, 1.0), bias);
  double bias_mean = 0.0;
  for (double b : bias.data()) {
    bias_mean += b / 16.0;
  }
  for (std::size_t r = 0; r < 4; ++r) {
    double m = 0.0;
    for (std::size_t j = 0; j < 16; ++j) {
      m += y.at(r, j) / 16.0;
    }
    EXPECT_NEAR(m, bias_mean, 1e-9);
  }
  // Zero bias: per-row mean 0 and variance ~1.
  Tensor z = layer_norm(x, Tensor::full({16}, 1.0), Tensor::zeros({16}), 1e-12);
  for (std::size_t r = 0; r < 4; ++r) {
    double m = 0.0, v = 0.0;
    for (std::size_t j = 0; j < 16; ++j) {
      m += z.at(r, j) / 16.0;
    }
    for (std::size_t j = 0; j < 16; ++j) {
      v += (z.at(r, j) - m) * (z.at(r, j) - m) / 16.0;
    }
    EXPECT_NEAR(m, 0.0, 1e-9);
    EXPECT_NEAR(v, 1.0, 1e-9);
  }
}

TEST(LayerNorm, GainShapeMismatch) {
  EXPECT_THROW(layer_norm(Tensor::zeros({2, 3}), Tensor::zeros({2}), Tensor::zeros({3})),
               Error);
}

TEST(Elementwise, ExpOfZero) { EXPECT_EQ(exp(Tensor::scalar(0.0)).item(), 1.0); }

TEST(Elementwise, GeluMatchesDirectFormula) {
  for (double x = -6.0; x <= 6.0; x += 0.05) {
    const double expect = x * 0.5 * std::erfc(-x / std::numbers::sqrt2);
    EXPECT_NEAR(gelu(Tensor::scalar(x)).item(), expect, 1e-9) << x;
  }
}

TEST(Elementwise, DomainErrors) {
  EXPECT_THROW(log(Tensor::vector({1.0, 0.0})), Error);
  EXPECT_THROW(div(Tensor::vector({1.0}), Tensor::vector({0.0})), Error);
  EXPECT_THROW(add(Tensor::zeros({2}), Tensor::zeros({3})), Error);
}

TEST(Elementwise, SoftplusIsStableAndPositive) {
  Tensor y = softplus(Tensor::vector({-800.0, 0.0, 800.0}));
  EXPECT_GT(y[0], 0.0 - 1e-300);
  EXPECT_NEAR(y[1], std::log(2.0), 1e-15);
  EXPECT_DOUBLE_EQ(y[2], 800.0);
}

TEST(Backward, SumGivesOnes) {
  Tape tape;
  TapeScope scope(tape);
  Tensor x = Tensor::vector({1, 2, 3}, true);
  backward(sum(x));
  for (double g : x.grad()) {
    EXPECT_EQ(g, 1.0);
  }
}

TEST(Backward, SumOfSquaresGivesTwoX) {
  Tape tape;
  TapeScope scope(tape);
  Tensor x = Tensor::vector({1.5, -2, 3}, true);
  backward(sum(mul(x, x)));
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_EQ(x.grad()[i], 2.0 * x[i]);
  }
}

TEST(Backward, FanOutAccumulates) {
  Tape tape;
  TapeScope scope(tape);
  Tensor x = Tensor::vector({1, 2, 3}, true);
  backward(add(sum(x), sum(x)));
  for (double g : x.grad()) {
    EXPECT_EQ(g, 2.0);
  }
}

TEST(Backward, NonScalarLossThrows) {
  Tape tape;
  TapeScope scope(tape);
  Tensor x = Tensor::vector({1, 2}, true);
  try {
    backward(scale(x, 2.0));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::kNotScalar);
  }
}

TEST(Backward, NoTapeRecordsNothing) {
  Tensor x = Tensor::vector({1, 2}, true);
  Tensor y = exp(x);
  EXPECT_FALSE(y.requires_grad());
}

TEST(Backward, ThreeLayerMlpMatchesFiniteDifferences) {
  std::mt19937_64 rng(21);
  Tensor input = random_tensor(rng, {5, 4});
  std::vector<Tensor> params{
      random_tensor(rng, {4, 6}, -1, 1, true), random_tensor(rng, {6}, -1, 1, true),
      random_tensor(rng, {6, 5}, -1, 1, true), random_tensor(rng, {5}, -1, 1, true),
      random_tensor(rng, {5, 1}, -1, 1, true), random_tensor(rng, {1}, -1, 1, true)};
  auto loss = [&]() {
    Tensor h = tanh(add_row(matmul(input, params[0]), params[1]));
    h = gelu(add_row(matmul(h, params[2]), params[3]));
    Tensor out = add_row(matmul(h, params[4]), params[5]);
    return mean(mul(out, out));
  };
  const auto report = grad_check_params(loss, params, 1e-5, 1e-4);
  EXPECT_TRUE(report.passed) << report.max_relative_error;
  EXPECT_EQ(report.checked, 4u * 6 + 6 + 6 * 5 + 5 + 5 + 1);
}

TEST(GradCheck, SumIsExact) {
  std::mt19937_64 rng(1);
  const auto report = grad_check([](const Tensor& x) { return sum(x); },
                                 random_tensor(rng, {3, 3}));
  EXPECT_TRUE(report.passed);
  EXPECT_LT(report.max_relative_error, 1e-9);
}

TEST(GradCheck, SoftmaxCrossEntropy) {
  std::mt19937_64 rng(2);
  Tensor onehot = Tensor::matrix(2, 4, {0, 1, 0, 0, 0, 0, 0, 1});
  const auto report = grad_check(
      [&](const Tensor& logits) {
        return neg(mean(mul(onehot, log(softmax(logits)))));
      },
      random_tensor(rng, {2, 4}, -3, 3));
  EXPECT_TRUE(report.passed) << report.max_relative_error;
}

TEST(GradCheck, WrongBackwardIsReported) {
  std::mt19937_64 rng(3);
  const auto report = grad_check(
      [](const Tensor& x) {
        // d/dx sin(x) is cos(x); claim it is -cos(x).
        return sum(map(
            x, [](double v) { return std::sin(v); },
            [](double v) { return -std::cos(v); }));
      },
      random_tensor(rng, {4}));
  EXPECT_FALSE(report.passed);
  EXPECT_GT(report.max_relative_error, 1.0);
}

TEST(GradCheck, EveryDifferentiableOp) {
  std::mt19937_64 rng(77);
  const auto cases = test_support::differentiable_op_cases(rng);
  for (const auto& c : cases) {
    Tensor x = random_tensor(rng, {3, 4}, c.lo, c.hi);
    const auto report = grad_check(c.f, x, 1e-5, 1e-4);
    EXPECT_TRUE(report.passed) << c.name << " error " << report.max_relative_error;
  }
}

} // namespace
} // namespace coldstart::ad
