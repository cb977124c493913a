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

#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "coldstart/tensor.hpp"

namespace coldstart::test_support {

using ad::Shape;
using ad::Tensor;
using namespace ad;

inline Tensor random_tensor(std::mt19937_64& rng, Shape shape, double lo = -1.5,
                            double hi = 1.5, bool requires_grad = false) {
  std::uniform_real_distribution<double> u(lo, hi);
  std::vector<double> v(shape_size(shape));
  for (double& x : v) {
    x = u(rng);
  }
  return Tensor(std::move(shape), std::move(v), requires_grad);
}

struct OpCase {
  std::string name;
  std::function<Tensor(const Tensor&)> f;
  double lo = -1.5;
  double hi = 1.5;
};

/// One scalar-valued probe per differentiable op, each reading its [3 x 4]
/// argument through the op under test.
inline std::vector<OpCase> differentiable_op_cases(std::mt19937_64& rng) {
  Tensor other = random_tensor(rng, {3, 4}, 0.5, 2.0);
  Tensor right = random_tensor(rng, {4, 2});
  Tensor row = random_tensor(rng, {4}, 0.5, 1.5);
  Tensor weights = random_tensor(rng, {3, 4});
  Tensor square3 = random_tensor(rng, {3, 3});
  const std::vector<std::int64_t> idx{2, 0, 2};
  auto weighted = [weights](const Tensor& y) { return sum(mul(y, weights)); };
  return {
      {"add", [=](const Tensor& x) { return weighted(add(x, other)); }},
      {"add_self", [=](const Tensor& x) { return weighted(add(x, x)); }},
      {"sub", [=](const Tensor& x) { return weighted(sub(other, x)); }},
      {"mul", [=](const Tensor& x) { return weighted(mul(x, other)); }},
      {"div_num", [=](const Tensor& x) { return weighted(div(x, other)); }},
      {"div_den", [=](const Tensor& x) { return weighted(div(other, x)); }, 0.5, 2.0},
      {"neg", [=](const Tensor& x) { return weighted(neg(x)); }},
      {"exp", [=](const Tensor& x) { return weighted(exp(x)); }},
      {"log", [=](const Tensor& x) { return weighted(log(x)); }, 0.2, 3.0},
      {"tanh", [=](const Tensor& x) { return weighted(tanh(x)); }},
      {"relu", [=](const Tensor& x) { return weighted(relu(x)); }, 0.1, 1.5},
      {"gelu", [=](const Tensor& x) { return weighted(gelu(x)); }},
      {"sigmoid", [=](const Tensor& x) { return weighted(sigmoid(x)); }},
      {"softplus", [=](const Tensor& x) { return weighted(softplus(x)); }},
      {"lgamma", [=](const Tensor& x) { return weighted(lgamma(x)); }, 0.3, 6.0},
      {"scale", [=](const Tensor& x) { return weighted(scale(x, -2.5)); }},
      {"add_scalar", [=](const Tensor& x) { return weighted(add_scalar(x, 3.0)); }},
      {"add_row", [=](const Tensor& x) { return weighted(add_row(x, row)); }},
      {"mul_row", [=](const Tensor& x) { return weighted(mul_row(x, row)); }},
      {"matmul_left", [=](const Tensor& x) { return sum(matmul(x, right)); }},
      {"matmul_right",
       [=](const Tensor& x) { return sum(exp(matmul(transpose(square3), x))); }},
      {"transpose", [=](const Tensor& x) { return weighted(transpose(transpose(x))); }},
      {"reshape",
       [=](const Tensor& x) { return weighted(reshape(reshape(x, {12}), {3, 4})); }},
      {"concat0",
       [=](const Tensor& x) { return sum(exp(concat({x, other, x}, 0))); }},
      {"concat1", [=](const Tensor& x) { return sum(exp(concat({other, x}, 1))); }},
      {"slice0", [=](const Tensor& x) { return sum(exp(slice(x, 0, 1, 3))); }},
      {"slice1", [=](const Tensor& x) { return sum(exp(slice(x, 1, 1, 3))); }},
      {"embedding",
       [=](const Tensor& x) { return sum(exp(embedding_lookup(x, idx))); }},
      {"repeat_rows",
       [=](const Tensor& x) { return sum(exp(repeat_rows(slice(x, 0, 0, 1), 5))); }},
      {"sum_axis0", [=](const Tensor& x) { return sum(exp(sum(x, 0))); }},
      {"sum_axis1", [=](const Tensor& x) { return sum(exp(sum(x, 1))); }},
      {"mean", [=](const Tensor& x) { return mul(mean(x), mean(x)); }},
      {"mean_axis", [=](const Tensor& x) { return sum(exp(mean(x, 1))); }},
      {"softmax1", [=](const Tensor& x) { return weighted(softmax(x, 1)); }},
      {"softmax0", [=](const Tensor& x) { return weighted(softmax(x, 0)); }},
      {"causal_softmax",
       [=](const Tensor& x) {
         return sum(mul(softmax(causal_mask(matmul(x, transpose(x))), 1), square3));
       }},
      {"layer_norm_x",
       [=](const Tensor& x) { return weighted(layer_norm(x, row, Tensor::zeros({4}))); }},
      {"layer_norm_gain_bias",
       [=](const Tensor& x) {
         Tensor gain = reshape(slice(x, 0, 0, 1), {4});
         Tensor bias = reshape(slice(x, 0, 1, 2), {4});
         return weighted(layer_norm(other, gain, bias));
       }},
        {"map",
       [=](const Tensor& x) {
         return weighted(map(
             x, [](double v) { return v * v * v; }, [](double v) { return 3.0 * v * v; }));
       }},
      {"dropout",
       [=](const Tensor& x) {
         std::mt19937_64 mask(5); // same mask on every evaluation
         return weighted(dropout(x, 0.3, mask));
       }},
  };
}

} // namespace coldstart::test_support
