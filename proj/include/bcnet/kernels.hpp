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

#pragma once

// Data-parallel inner loops behind the tensor engine. Each kernel has a
// scalar reference implementation and, on x86-64, an AVX2+FMA variant picked
// at runtime. Elementwise kernels are bit-identical across variants; gemm
// differs only by FMA rounding and summation blocking.

#include <cstddef>
#include <span>

namespace bcnet::kernels {

enum class Isa { scalar, avx2 };

const char* isa_name(Isa isa) noexcept;
bool isa_available(Isa isa) noexcept;

// Best available variant unless BCNET_ISA=scalar|avx2 is set in the
// environment or set_isa() was called.
Isa active_isa() noexcept;
void set_isa(Isa isa);

struct AdamCoefficients {
  float lr;
  float beta1;
  float beta2;
  float epsilon;
  float bias_correction1;  // 1 - beta1^t
  float bias_correction2;  // 1 - beta2^t
};

struct KernelTable {
  // C[MxN] = (accumulate ? C : 0) + A[MxK] * B[KxN], row-major with leading dims.
  void (*gemm)(std::size_t m, std::size_t n, std::size_t k, const float* a,
               std::size_t lda, const float* b, std::size_t ldb, float* c,
               std::size_t ldc, bool accumulate);
  // y = max(x, 0)
  void (*relu_forward)(const float* x, float* y, std::size_t n);
  // gx += x > 0 ? gy : 0
  void (*relu_backward)(const float* x, const float* gy, float* gx,
                        std::size_t n);
  // dst += src
  void (*accumulate)(const float* src, float* dst, std::size_t n);
  void (*adam_update)(float* param, const float* grad, float* m, float* v,
                      std::size_t n, const AdamCoefficients& coeff);
};

const KernelTable& table(Isa isa);
inline const KernelTable& active() { return table(active_isa()); }

// Convenience wrappers over the active table.
void gemm(std::size_t m, std::size_t n, std::size_t k, const float* a,
          std::size_t lda, const float* b, std::size_t ldb, float* c,
          std::size_t ldc, bool accumulate);
void relu_forward(std::span<const float> x, std::span<float> y);
void relu_backward(std::span<const float> x, std::span<const float> gy,
                   std::span<float> gx);
void accumulate(std::span<const float> src, std::span<float> dst);
void adam_update(std::span<float> param, std::span<const float> grad,
                 std::span<float> m, std::span<float> v,
                 const AdamCoefficients& coeff);

// dst[c * rows + r] = src[r * ld + c]
void transpose(std::size_t rows, std::size_t cols, const float* src,
               std::size_t ld, float* dst);

namespace scalar {
extern const KernelTable kTable;
}
#if defined(__x86_64__) || defined(_M_X64)
namespace avx2 {
extern const KernelTable kTable;
}
#endif

}  // namespace bcnet::kernels
