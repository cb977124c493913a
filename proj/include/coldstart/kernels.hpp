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

// Dense double-precision inner loops used by the tensor engine, the
// feature extractor and DBSCAN. Every kernel has a portable scalar
// reference and an AVX2+FMA variant; the variant is chosen once at startup
// from CPUID and can be forced with COLDSTART_SIMD=scalar|avx2 or
// set_isa().

#include <cstddef>
#include <span>
#include <string_view>

namespace coldstart::kernels {

enum class Isa { kScalar, kAvx2 };

std::string_view isa_name(Isa isa);

/// True when the CPU and the build both support the given ISA.
bool isa_available(Isa isa);

/// ISA currently used by the dispatching entry points below.
Isa active_isa();

/// Forces an ISA. Throws std::invalid_argument when it is unavailable.
void set_isa(Isa isa);

// Dispatching entry points. Spans must have equal lengths where paired.
double dot(std::span<const double> a, std::span<const double> b);
double sum(std::span<const double> x);
double squared_distance(std::span<const double> a, std::span<const double> b);
/// y += alpha * x
void axpy(double alpha, std::span<const double> x, std::span<double> y);
/// y = x * y (elementwise, in place on y)
void hadamard(std::span<const double> x, std::span<double> y);

// Row-major GEMM, accumulating into C (C += op(A) * op(B)).
//   nn: A[m,k]  * B[k,n]
//   nt: A[m,k]  * B[n,k]^T
//   tn: A[k,m]^T * B[k,n]
void gemm_nn(std::size_t m, std::size_t k, std::size_t n, const double* a,
             const double* b, double* c);
void gemm_nt(std::size_t m, std::size_t k, std::size_t n, const double* a,
             const double* b, double* c);
void gemm_tn(std::size_t m, std::size_t k, std::size_t n, const double* a,
             const double* b, double* c);

// Per-ISA implementations, exposed for equivalence testing.
namespace scalar {
double dot(const double* a, const double* b, std::size_t n);
double sum(const double* x, std::size_t n);
double squared_distance(const double* a, const double* b, std::size_t n);
void axpy(double alpha, const double* x, double* y, std::size_t n);
void hadamard(const double* x, double* y, std::size_t n);
} // namespace scalar

namespace avx2 {
double dot(const double* a, const double* b, std::size_t n);
double sum(const double* x, std::size_t n);
double squared_distance(const double* a, const double* b, std::size_t n);
void axpy(double alpha, const double* x, double* y, std::size_t n);
void hadamard(const double* x, double* y, std::size_t n);
} // namespace avx2

} // namespace coldstart::kernels
