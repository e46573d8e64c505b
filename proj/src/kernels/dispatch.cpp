// Copyright 2026 The bcnet Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <atomic>
#include <cstdlib>
#include <cstring>

#include "bcnet/error.hpp"
#include "bcnet/kernels.hpp"

namespace bcnet::kernels {

namespace {

constexpr int kUnset = -1;
std::atomic<int> g_isa{kUnset};

Isa detect() noexcept {
  if (const char* env = std::getenv("BCNET_ISA")) {
    if (std::strcmp(env, "scalar") == 0) return Isa::scalar;
    if (std::strcmp(env, "avx2") == 0 && isa_available(Isa::avx2))
      return Isa::avx2;
  }
  return isa_available(Isa::avx2) ? Isa::avx2 : Isa::scalar;
}

}  // namespace

const char* isa_name(Isa isa) noexcept {
  switch (isa) {
    case Isa::scalar:
      return "scalar";
    case Isa::avx2:
      return "avx2";
  }
  return "unknown";
}

bool isa_available(Isa isa) noexcept {
  switch (isa) {
    case Isa::scalar:
      return true;
    case Isa::avx2:
#if defined(__x86_64__) || defined(_M_X64)
      return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
      return false;
#endif
  }
  return false;
}

Isa active_isa() noexcept {
  int v = g_isa.load(std::memory_order_relaxed);
  if (v == kUnset) {
    v = static_cast<int>(detect());
    g_isa.store(v, std::memory_order_relaxed);
  }
  return static_cast<Isa>(v);
}

void set_isa(Isa isa) {
  if (!isa_available(isa))
    throw UsageError(std::string("instruction set not available: ") +
                     isa_name(isa));
  g_isa.store(static_cast<int>(isa), std::memory_order_relaxed);
}

const KernelTable& table(Isa isa) {
#if defined(__x86_64__) || defined(_M_X64)
  if (isa == Isa::avx2) {
    if (!isa_available(Isa::avx2))
      throw UsageError("avx2 kernels requested on a CPU without AVX2/FMA");
    return avx2::kTable;
  }
#endif
  if (isa != Isa::scalar)
    throw UsageError(std::string("no kernels for ") + isa_name(isa));
  return scalar::kTable;
}

void gemm(std::size_t m, std::size_t n, std::size_t k, const float* a,
          std::size_t lda, const float* b, std::size_t ldb, float* c,
          std::size_t ldc, bool accumulate) {
  active().gemm(m, n, k, a, lda, b, ldb, c, ldc, accumulate);
}

void relu_forward(std::span<const float> x, std::span<float> y) {
  active().relu_forward(x.data(), y.data(), x.size());
}

void relu_backward(std::span<const float> x, std::span<const float> gy,
                   std::span<float> gx) {
  active().relu_backward(x.data(), gy.data(), gx.data(), x.size());
}

void accumulate(std::span<const float> src, std::span<float> dst) {
  active().accumulate(src.data(), dst.data(), src.size());
}

void adam_update(std::span<float> param, std::span<const float> grad,
                 std::span<float> m, std::span<float> v,
                 const AdamCoefficients& coeff) {
  active().adam_update(param.data(), grad.data(), m.data(), v.data(),
                       param.size(), coeff);
}

void transpose(std::size_t rows, std::size_t cols, const float* src,
               std::size_t ld, float* dst) {
  constexpr std::size_t kBlock = 32;
  for (std::size_t r0 = 0; r0 < rows; r0 += kBlock)
    for (std::size_t c0 = 0; c0 < cols; c0 += kBlock) {
      const std::size_t r1 = std::min(rows, r0 + kBlock);
      const std::size_t c1 = std::min(cols, c0 + kBlock);
      for (std::size_t r = r0; r < r1; ++r)
        for (std::size_t c = c0; c < c1; ++c) dst[c * rows + r] = src[r * ld + c];
    }
}

}  // namespace bcnet::kernels
