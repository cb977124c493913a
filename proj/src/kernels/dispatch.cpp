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

#include <atomic>
#include <cassert>
#include <cstdlib>
#include <stdexcept>
#include <string>

namespace coldstart::kernels {

namespace {

struct Table {
  double (*dot)(const double*, const double*, std::size_t);
  double (*sum)(const double*, std::size_t);
  double (*squared_distance)(const double*, const double*, std::size_t);
  void (*axpy)(double, const double*, double*, std::size_t);
  void (*hadamard)(const double*, double*, std::size_t);
};

constexpr Table kScalarTable{&scalar::dot, &scalar::sum,
                             &scalar::squared_distance, &scalar::axpy,
                             &scalar::hadamard};
constexpr Table kAvx2Table{&avx2::dot, &avx2::sum, &avx2::squared_distance,
                           &avx2::axpy, &avx2::hadamard};

const Table& table_for(Isa isa) {
  return isa == Isa::kAvx2 ? kAvx2Table : kScalarTable;
}

Isa detect() {
  if (const char* forced = std::getenv("COLDSTART_SIMD")) {
    const std::string name(forced);
    if (name == "scalar") {
      return Isa::kScalar;
    }
    if (name == "avx2" && isa_available(Isa::kAvx2)) {
      return Isa::kAvx2;
    }
  }
  return isa_available(Isa::kAvx2) ? Isa::kAvx2 : Isa::kScalar;
}

std::atomic<const Table*>& current() {
  static std::atomic<const Table*> table{&table_for(detect())};
  return table;
}

const Table& t() { return *current().load(std::memory_order_relaxed); }

} // namespace

std::string_view isa_name(Isa isa) {
  return isa == Isa::kAvx2 ? "avx2" : "scalar";
}

bool isa_available(Isa isa) {
  if (isa == Isa::kScalar) {
    return true;
  }
#if defined(COLDSTART_HAVE_AVX2) && (defined(__x86_64__) || defined(__i386__))
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

Isa active_isa() {
  return &t() == &kAvx2Table ? Isa::kAvx2 : Isa::kScalar;
}

void set_isa(Isa isa) {
  if (!isa_available(isa)) {
    throw std::invalid_argument("ISA not available: " + std::string(isa_name(isa)));
  }
  current().store(&table_for(isa), std::memory_order_relaxed);
}

double dot(std::span<const double> a, std::span<const double> b) {
  assert(a.size() == b.size());
  return t().dot(a.data(), b.data(), a.size());
}

double sum(std::span<const double> x) { return t().sum(x.data(), x.size()); }

double squared_distance(std::span<const double> a, std::span<const double> b) {
  assert(a.size() == b.size());
  return t().squared_distance(a.data(), b.data(), a.size());
}

void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  assert(x.size() == y.size());
  t().axpy(alpha, x.data(), y.data(), x.size());
}

void hadamard(std::span<const double> x, std::span<double> y) {
  assert(x.size() == y.size());
  t().hadamard(x.data(), y.data(), x.size());
}

void gemm_nn(std::size_t m, std::size_t k, std::size_t n, const double* a,
             const double* b, double* c) {
  const Table& k_ = t();
  for (std::size_t i = 0; i < m; ++i) {
    double* crow = c + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const double av = a[i * k + p];
      if (av != 0.0) {
        k_.axpy(av, b + p * n, crow, n);
      }
    }
  }
}

void gemm_nt(std::size_t m, std::size_t k, std::size_t n, const double* a,
             const double* b, double* c) {
  const Table& k_ = t();
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      c[i * n + j] += k_.dot(a + i * k, b + j * k, k);
    }
  }
}

void gemm_tn(std::size_t m, std::size_t k, std::size_t n, const double* a,
             const double* b, double* c) {
  const Table& k_ = t();
  for (std::size_t p = 0; p < k; ++p) {
    const double* brow = b + p * n;
    for (std::size_t i = 0; i < m; ++i) {
      const double av = a[p * m + i];
      if (av != 0.0) {
        k_.axpy(av, brow, c + i * n, n);
      }
    }
  }
}

} // namespace coldstart::kernels
