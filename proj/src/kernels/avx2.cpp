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

// Compiled with -mavx2 -mfma -ffp-contract=off; only reached after a runtime
// CPU check in dispatch.cpp.

#include <immintrin.h>

#include <algorithm>
#include <cstring>
#include <vector>

#include "bcnet/kernels.hpp"

namespace bcnet::kernels::avx2 {

namespace {

constexpr std::size_t kMr = 6;    // rows per micro-tile
constexpr std::size_t kNr = 16;   // columns per micro-tile (two ymm)
constexpr std::size_t kKc = 256;  // depth of a packed B block

inline __m256i tail_mask(std::size_t lanes) {
  alignas(32) static const int kBits[16] = {-1, -1, -1, -1, -1, -1, -1, -1,
                                            0,  0,  0,  0,  0,  0,  0,  0};
  return _mm256_loadu_si256(reinterpret_cast<const __m256i*>(kBits + 8 - lanes));
}

// C tile (rows x ncols, ncols <= 16) += A[rows x kc] * packed[kc x 16].
template <std::size_t Rows>
void micro_tile(std::size_t kc, const float* a, std::size_t lda,
                const float* packed, float* c, std::size_t ldc,
                std::size_t ncols, bool load_c) {
  __m256 acc0[Rows];
  __m256 acc1[Rows];
  const bool full = ncols == kNr;
  const __m256i m0 = tail_mask(std::min<std::size_t>(ncols, 8));
  const __m256i m1 = tail_mask(ncols > 8 ? ncols - 8 : 0);
  for (std::size_t r = 0; r < Rows; ++r) {
    if (!load_c) {
      acc0[r] = _mm256_setzero_ps();
      acc1[r] = _mm256_setzero_ps();
    } else if (full) {
      acc0[r] = _mm256_loadu_ps(c + r * ldc);
      acc1[r] = _mm256_loadu_ps(c + r * ldc + 8);
    } else {
      acc0[r] = _mm256_maskload_ps(c + r * ldc, m0);
      acc1[r] = _mm256_maskload_ps(c + r * ldc + 8, m1);
    }
  }
  for (std::size_t p = 0; p < kc; ++p) {
    const __m256 b0 = _mm256_loadu_ps(packed + p * kNr);
    const __m256 b1 = _mm256_loadu_ps(packed + p * kNr + 8);
    for (std::size_t r = 0; r < Rows; ++r) {
      const __m256 av = _mm256_broadcast_ss(a + r * lda + p);
      acc0[r] = _mm256_fmadd_ps(av, b0, acc0[r]);
      acc1[r] = _mm256_fmadd_ps(av, b1, acc1[r]);
    }
  }
  for (std::size_t r = 0; r < Rows; ++r) {
    if (full) {
      _mm256_storeu_ps(c + r * ldc, acc0[r]);
      _mm256_storeu_ps(c + r * ldc + 8, acc1[r]);
    } else {
      _mm256_maskstore_ps(c + r * ldc, m0, acc0[r]);
      _mm256_maskstore_ps(c + r * ldc + 8, m1, acc1[r]);
    }
  }
}

using TileFn = void (*)(std::size_t, const float*, std::size_t, const float*,
                        float*, std::size_t, std::size_t, bool);
constexpr TileFn kTiles[kMr + 1] = {nullptr,       &micro_tile<1>,
                                    &micro_tile<2>, &micro_tile<3>,
                                    &micro_tile<4>, &micro_tile<5>,
                                    &micro_tile<6>};

void gemm(std::size_t m, std::size_t n, std::size_t k, const float* a,
          std::size_t lda, const float* b, std::size_t ldb, float* c,
          std::size_t ldc, bool accumulate) {
  if (m == 0 || n == 0) return;
  if (k == 0) {
    if (!accumulate)
      for (std::size_t i = 0; i < m; ++i) std::memset(c + i * ldc, 0, n * sizeof(float));
    return;
  }
  const std::size_t panels = (n + kNr - 1) / kNr;
  thread_local std::vector<float> packed;
  packed.resize(panels * kKc * kNr);

  for (std::size_t pc = 0; pc < k; pc += kKc) {
    const std::size_t kc = std::min(kKc, k - pc);
    // Pack B[pc:pc+kc, :] into zero-padded column panels of width 16.
    for (std::size_t jp = 0; jp < panels; ++jp) {
      float* dst = packed.data() + jp * kKc * kNr;
      const std::size_t j0 = jp * kNr;
      const std::size_t w = std::min(kNr, n - j0);
      for (std::size_t p = 0; p < kc; ++p) {
        const float* src = b + (pc + p) * ldb + j0;
        float* row = dst + p * kNr;
        std::memcpy(row, src, w * sizeof(float));
        if (w < kNr) std::memset(row + w, 0, (kNr - w) * sizeof(float));
      }
    }
    const bool load_c = accumulate || pc > 0;
    for (std::size_t i = 0; i < m; i += kMr) {
      const std::size_t rows = std::min(kMr, m - i);
      const TileFn tile = kTiles[rows];
      for (std::size_t jp = 0; jp < panels; ++jp) {
        const std::size_t j0 = jp * kNr;
        tile(kc, a + i * lda + pc, lda, packed.data() + jp * kKc * kNr,
             c + i * ldc + j0, ldc, std::min(kNr, n - j0), load_c);
      }
    }
  }
}

void relu_forward(const float* x, float* y, std::size_t n) {
  const __m256 zero = _mm256_setzero_ps();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    const __m256 v = _mm256_loadu_ps(x + i);
    // max(v, 0) keeps +0 for v <= 0, matching the scalar select.
    _mm256_storeu_ps(y + i, _mm256_and_ps(v, _mm256_cmp_ps(v, zero, _CMP_GT_OQ)));
  }
  for (; i < n; ++i) y[i] = x[i] > 0.0f ? x[i] : 0.0f;
}

void relu_backward(const float* x, const float* gy, float* gx, std::size_t n) {
  const __m256 zero = _mm256_setzero_ps();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    const __m256 mask = _mm256_cmp_ps(_mm256_loadu_ps(x + i), zero, _CMP_GT_OQ);
    const __m256 g = _mm256_and_ps(_mm256_loadu_ps(gy + i), mask);
    const __m256 cur = _mm256_loadu_ps(gx + i);
    // Masked-off lanes must stay bit-identical, including -0.0.
    _mm256_storeu_ps(gx + i, _mm256_blendv_ps(cur, _mm256_add_ps(cur, g), mask));
  }
  for (; i < n; ++i)
    if (x[i] > 0.0f) gx[i] += gy[i];
}

void accumulate(const float* src, float* dst, std::size_t n) {
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8)
    _mm256_storeu_ps(dst + i, _mm256_add_ps(_mm256_loadu_ps(dst + i),
                                            _mm256_loadu_ps(src + i)));
  for (; i < n; ++i) dst[i] += src[i];
}

void adam_update(float* param, const float* grad, float* m, float* v,
                 std::size_t n, const AdamCoefficients& c) {
  const __m256 b1 = _mm256_set1_ps(c.beta1);
  const __m256 b2 = _mm256_set1_ps(c.beta2);
  const __m256 omb1 = _mm256_set1_ps(1.0f - c.beta1);
  const __m256 omb2 = _mm256_set1_ps(1.0f - c.beta2);
  const __m256 bc1 = _mm256_set1_ps(c.bias_correction1);
  const __m256 bc2 = _mm256_set1_ps(c.bias_correction2);
  const __m256 lr = _mm256_set1_ps(c.lr);
  const __m256 eps = _mm256_set1_ps(c.epsilon);
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    const __m256 g = _mm256_loadu_ps(grad + i);
    const __m256 mi = _mm256_add_ps(_mm256_mul_ps(b1, _mm256_loadu_ps(m + i)),
                                    _mm256_mul_ps(omb1, g));
    const __m256 vi = _mm256_add_ps(_mm256_mul_ps(b2, _mm256_loadu_ps(v + i)),
                                    _mm256_mul_ps(omb2, _mm256_mul_ps(g, g)));
    _mm256_storeu_ps(m + i, mi);
    _mm256_storeu_ps(v + i, vi);
    const __m256 m_hat = _mm256_div_ps(mi, bc1);
    const __m256 v_hat = _mm256_div_ps(vi, bc2);
    const __m256 step = _mm256_div_ps(_mm256_mul_ps(lr, m_hat),
                                      _mm256_add_ps(_mm256_sqrt_ps(v_hat), eps));
    _mm256_storeu_ps(param + i, _mm256_sub_ps(_mm256_loadu_ps(param + i), step));
  }
  if (i < n) scalar::kTable.adam_update(param + i, grad + i, m + i, v + i, n - i, c);
}

}  // namespace

const KernelTable kTable{&gemm, &relu_forward, &relu_backward, &accumulate,
                         &adam_update};

}  // namespace bcnet::kernels::avx2
