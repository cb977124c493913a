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

#include "coldstart/kernels.hpp"

#include <cmath>
#include <random>
#include <vector>

#include <gtest/gtest.h>

namespace coldstart::kernels {
namespace {

std::vector<double> random_vector(std::mt19937_64& rng, std::size_t n) {
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  std::vector<double> v(n);
  for (double& x : v) {
    x = u(rng);
  }
  return v;
}

// Bound on reassociation error for a sum of n terms with magnitudes `mass`.
double reassoc_tol(std::size_t n, double mass) {
  return 4.0 * static_cast<double>(n + 1) * 1.1e-16 * mass + 1e-300;
}

class IsaGuard {
 public:
  IsaGuard() : saved_(active_isa()) {}
  ~IsaGuard() { set_isa(saved_); }

 private:
  Isa saved_;
};

TEST(Kernels, ScalarIsAlwaysAvailable) {
  EXPECT_TRUE(isa_available(Isa::kScalar));
  EXPECT_EQ(isa_name(Isa::kScalar), "scalar");
}

TEST(Kernels, SimdMatchesScalarReference) {
  if (!isa_available(Isa::kAvx2)) {
    GTEST_SKIP() << "AVX2 not available on this host";
  }
  std::mt19937_64 rng(7);
  for (std::size_t n = 0; n < 70; ++n) {
    const auto a = random_vector(rng, n);
    const auto b = random_vector(rng, n);
    double mass_dot = 0.0, mass_sum = 0.0, mass_sq = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      mass_dot += std::abs(a[i] * b[i]);
      mass_sum += std::abs(a[i]);
      mass_sq += (a[i] - b[i]) * (a[i] - b[i]);
    }
    EXPECT_NEAR(avx2::dot(a.data(), b.data(), n), scalar::dot(a.data(), b.data(), n),
                reassoc_tol(n, mass_dot));
    EXPECT_NEAR(avx2::sum(a.data(), n), scalar::sum(a.data(), n),
                reassoc_tol(n, mass_sum));
    EXPECT_NEAR(avx2::squared_distance(a.data(), b.data(), n),
                scalar::squared_distance(a.data(), b.data(), n),
                reassoc_tol(n, mass_sq));

    auto y1 = b, y2 = b;
    scalar::axpy(0.37, a.data(), y1.data(), n);
    avx2::axpy(0.37, a.data(), y2.data(), n);
    for (std::size_t i = 0; i < n; ++i) {
      // FMA rounds once, the scalar form twice.
      EXPECT_NEAR(y1[i], y2[i], 1e-15 * (std::abs(y1[i]) + 1.0));
    }
    auto h1 = b, h2 = b;
    scalar::hadamard(a.data(), h1.data(), n);
    avx2::hadamard(a.data(), h2.data(), n);
    EXPECT_EQ(h1, h2);
  }
}

void naive_gemm(std::size_t m, std::size_t k, std::size_t n,
                const std::vector<double>& a, const std::vector<double>& b,
                std::vector<double>& c) {
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      double acc = 0.0;
      for (std::size_t p = 0; p < k; ++p) {
        acc += a[i * k + p] * b[p * n + j];
      }
      c[i * n + j] += acc;
    }
  }
}

std::vector<double> transposed(const std::vector<double>& x, std::size_t rows,
                               std::size_t cols) {
  std::vector<double> t(x.size());
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t j = 0; j < cols; ++j) {
      t[j * rows + i] = x[i * cols + j];
    }
  }
  return t;
}

TEST(Kernels, GemmVariantsMatchTripleLoopOnEveryIsa) {
  IsaGuard guard;
  std::mt19937_64 rng(11);
  for (Isa isa : {Isa::kScalar, Isa::kAvx2}) {
    if (!isa_available(isa)) {
      continue;
    }
    set_isa(isa);
    for (int trial = 0; trial < 20; ++trial) {
      const std::size_t m = 1 + rng() % 9, k = 1 + rng() % 13, n = 1 + rng() % 11;
      const auto a = random_vector(rng, m * k);
      const auto b = random_vector(rng, k * n);
      std::vector<double> expect(m * n, 0.5);
      naive_gemm(m, k, n, a, b, expect);

      std::vector<double> c_nn(m * n, 0.5), c_nt(m * n, 0.5), c_tn(m * n, 0.5);
      gemm_nn(m, k, n, a.data(), b.data(), c_nn.data());
      const auto bt = transposed(b, k, n);
      gemm_nt(m, k, n, a.data(), bt.data(), c_nt.data());
      const auto at = transposed(a, m, k);
      gemm_tn(m, k, n, at.data(), b.data(), c_tn.data());
      for (std::size_t i = 0; i < m * n; ++i) {
        EXPECT_NEAR(c_nn[i], expect[i], 1e-12) << isa_name(isa);
        EXPECT_NEAR(c_nt[i], expect[i], 1e-12) << isa_name(isa);
        EXPECT_NEAR(c_tn[i], expect[i], 1e-12) << isa_name(isa);
      }
    }
  }
}

TEST(Kernels, SetIsaRejectsUnavailable) {
  if (isa_available(Isa::kAvx2)) {
    GTEST_SKIP() << "nothing unavailable to reject on this host";
  }
  EXPECT_THROW(set_isa(Isa::kAvx2), std::invalid_argument);
}

} // namespace
} // namespace coldstart::kernels
