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

#include <cmath>
#include <cstdint>
#include <random>

#include "coldstart/tensor.hpp"

namespace coldstart::forecaster {

/// Seeded weight initialization; all tensors require gradients.
class Initializer {
 public:
  explicit Initializer(std::uint64_t seed) : rng_(seed) {}

  ad::Tensor xavier(std::size_t fan_in, std::size_t fan_out) {
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    std::uniform_real_distribution<double> u(-limit, limit);
    std::vector<double> w(fan_in * fan_out);
    for (auto& x : w) {
      x = u(rng_);
    }
    return ad::Tensor({fan_in, fan_out}, std::move(w), true);
  }

  ad::Tensor normal(std::size_t rows, std::size_t cols) {
    std::normal_distribution<double> g(0.0, 1.0);
    std::vector<double> w(rows * cols);
    for (auto& x : w) {
      x = g(rng_);
    }
    return ad::Tensor({rows, cols}, std::move(w), true);
  }

  ad::Tensor zeros(std::size_t n) { return ad::Tensor::zeros({n}, true); }
  ad::Tensor ones(std::size_t n) { return ad::Tensor::full({n}, 1.0, true); }

 private:
  std::mt19937_64 rng_;
};

} // namespace coldstart::forecaster
