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

#include "bcnet/ops.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstring>
#include <string>
#include <vector>

#include "bcnet/error.hpp"
#include "bcnet/kernels.hpp"

namespace bcnet::ops {

namespace {

enum FaultBit : unsigned { kFaultDense = 1u, kFaultConv2d = 2u, kFaultConv1x1 = 4u };
std::atomic<unsigned> g_faults{0};

bool faulty(unsigned bit) {
  return (g_faults.load(std::memory_order_relaxed) & bit) != 0;
}

// Batch view of a spatial tensor: rank 3 is a batch of one.
struct Spatial {
  std::size_t n, h, w, c;
};

Spatial spatial_of(const Tensor& t, const char* op) {
  if (t.rank() == 3) return {1, t.dim(0), t.dim(1), t.dim(2)};
  if (t.rank() == 4) return {t.dim(0), t.dim(1), t.dim(2), t.dim(3)};
  throw DimensionError(std::string(op) + ": expected HWC or NHWC input, got " +
                       shape_string(t.shape()));
}

Shape spatial_shape(const Tensor& like, std::size_t n, std::size_t h,
                    std::size_t w, std::size_t c) {
  if (like.rank() == 3) return {h, w, c};
  return {n, h, w, c};
}

void check_output(const Tensor& t, const char* op) { t.check_finite(op); }

std::vector<float>& scratch(int slot) {
  thread_local std::vector<float> buffers[4];
  return buffers[slot];
}

void check_conv_operands(const Tensor& input, const Tensor& kernel,
                         const Tensor& bias, const char* op) {
  if (kernel.rank() != 4)
    throw DimensionError(std::string(op) + ": kernel must be kh x kw x Cin x Cout, got " +
                         shape_string(kernel.shape()));
  const Spatial s = spatial_of(input, op);
  if (kernel.dim(2) != s.c)
    throw DimensionError(std::string(op) + ": input has " + std::to_string(s.c) +
                         " channels but kernel expects " + std::to_string(kernel.dim(2)));
  if (bias.rank() != 1 || bias.dim(0) != kernel.dim(3))
    throw DimensionError(std::string(op) + ": bias shape " + shape_string(bias.shape()) +
                         " does not match " + std::to_string(kernel.dim(3)) +
                         " output channels");
}

// Unfolds one HWC image into an (out_h*out_w) x (kh*kw*cin) matrix.
void im2col(const float* image, const ConvGeometry& g, float* cols) {
  const std::size_t row_len = g.kh * g.kw * g.cin;
  for (std::size_t oy = 0; oy < g.out_h; ++oy)
    for (std::size_t ox = 0; ox < g.out_w; ++ox) {
      float* dst = cols + (oy * g.out_w + ox) * row_len;
      for (std::size_t ky = 0; ky < g.kh; ++ky) {
        const long iy = static_cast<long>(oy * g.stride + ky) - static_cast<long>(g.pad_top);
        for (std::size_t kx = 0; kx < g.kw; ++kx, dst += g.cin) {
          const long ix = static_cast<long>(ox * g.stride + kx) - static_cast<long>(g.pad_left);
          if (iy < 0 || ix < 0 || iy >= static_cast<long>(g.in_h) ||
              ix >= static_cast<long>(g.in_w)) {
            std::memset(dst, 0, g.cin * sizeof(float));
          } else {
            std::memcpy(dst, image + (iy * g.in_w + ix) * g.cin, g.cin * sizeof(float));
          }
        }
      }
    }
}

void col2im_add(const float* cols, const ConvGeometry& g, float* image) {
  const std::size_t row_len = g.kh * g.kw * g.cin;
  for (std::size_t oy = 0; oy < g.out_h; ++oy)
    for (std::size_t ox = 0; ox < g.out_w; ++ox) {
      const float* src = cols + (oy * g.out_w + ox) * row_len;
      for (std::size_t ky = 0; ky < g.kh; ++ky) {
        const long iy = static_cast<long>(oy * g.stride + ky) - static_cast<long>(g.pad_top);
        for (std::size_t kx = 0; kx < g.kw; ++kx, src += g.cin) {
          const long ix = static_cast<long>(ox * g.stride + kx) - static_cast<long>(g.pad_left);
          if (iy < 0 || ix < 0 || iy >= static_cast<long>(g.in_h) ||
              ix >= static_cast<long>(g.in_w))
            continue;
          float* dst = image + (iy * g.in_w + ix) * g.cin;
          for (std::size_t c = 0; c < g.cin; ++c) dst[c] += src[c];
        }
      }
    }
}

bool is_pointwise(const ConvGeometry& g) {
  return g.kh == 1 && g.kw == 1 && g.stride == 1 && g.pad_top == 0 && g.pad_left == 0;
}

void add_bias_rows(float* out, std::size_t rows, const Tensor& bias) {
  const std::size_t cols = bias.size();
  for (std::size_t r = 0; r < rows; ++r) {
    float* row = out + r * cols;
    for (std::size_t c = 0; c < cols; ++c) row[c] += bias[c];
  }
}

void column_sums_add(const float* m, std::size_t rows, std::size_t cols, float* out) {
  for (std::size_t r = 0; r < rows; ++r) kernels::accumulate({m + r * cols, cols}, {out, cols});
}

}  // namespace

const char* padding_name(Padding p) noexcept {
  return p == Padding::valid ? "valid" : "same";
}

std::size_t conv_param_count(std::size_t kh, std::size_t kw, std::size_t cin,
                             std::size_t cout) noexcept {
  return kh * kw * cin * cout + cout;
}

std::size_t dense_param_count(std::size_t n, std::size_t m) noexcept {
  return n * m + m;
}

ConvGeometry conv_geometry(std::size_t in_h, std::size_t in_w, std::size_t cin,
                           std::size_t kh, std::size_t kw, std::size_t cout,
                           std::size_t stride, Padding padding) {
  if (stride == 0) throw DimensionError("conv2d: stride must be >= 1");
  if (kh == 0 || kw == 0 || cin == 0 || cout == 0 || in_h == 0 || in_w == 0)
    throw DimensionError("conv2d: zero-sized dimension");
  ConvGeometry g{in_h, in_w, cin, kh, kw, cout, stride, 0, 0, 0, 0};
  if (padding == Padding::valid) {
    if (kh > in_h || kw > in_w)
      throw DimensionError("conv2d: " + std::to_string(kh) + "x" + std::to_string(kw) +
                           " kernel larger than " + std::to_string(in_h) + "x" +
                           std::to_string(in_w) + " input with valid padding");
    g.out_h = (in_h - kh) / stride + 1;
    g.out_w = (in_w - kw) / stride + 1;
  } else {
    g.out_h = (in_h + stride - 1) / stride;
    g.out_w = (in_w + stride - 1) / stride;
    const std::size_t need_h = (g.out_h - 1) * stride + kh;
    const std::size_t need_w = (g.out_w - 1) * stride + kw;
    g.pad_top = need_h > in_h ? (need_h - in_h) / 2 : 0;
    g.pad_left = need_w > in_w ? (need_w - in_w) / 2 : 0;
  }
  return g;
}

Tensor conv2d(const Tensor& input, const Tensor& kernel, const Tensor& bias,
              std::size_t stride, Padding padding) {
  check_conv_operands(input, kernel, bias, "conv2d");
  const Spatial s = spatial_of(input, "conv2d");
  const ConvGeometry g = conv_geometry(s.h, s.w, s.c, kernel.dim(0), kernel.dim(1),
                                       kernel.dim(3), stride, padding);
  Tensor out(spatial_shape(input, s.n, g.out_h, g.out_w, g.cout));
  const std::size_t rows = g.out_h * g.out_w;
  const std::size_t depth = g.kh * g.kw * g.cin;
  const std::size_t in_stride = s.h * s.w * s.c;
  auto& cols = scratch(0);
  for (std::size_t b = 0; b < s.n; ++b) {
    const float* image = input.ptr() + b * in_stride;
    float* y = out.ptr() + b * rows * g.cout;
    const float* a = image;
    if (!is_pointwise(g)) {
      cols.resize(rows * depth);
      im2col(image, g, cols.data());
      a = cols.data();
    }
    kernels::gemm(rows, g.cout, depth, a, depth, kernel.ptr(), g.cout, y, g.cout, false);
    add_bias_rows(y, rows, bias);
  }
  check_output(out, "conv2d");
  return out;
}

namespace {

void conv_backward_impl(const Tensor& input, const Tensor& kernel,
                        const Tensor& grad_out, std::size_t stride, Padding padding,
                        float* grad_input, float* grad_kernel, float* grad_bias,
                        unsigned fault_bit) {
  const Spatial s = spatial_of(input, "conv2d");
  const ConvGeometry g = conv_geometry(s.h, s.w, s.c, kernel.dim(0), kernel.dim(1),
                                       kernel.dim(3), stride, padding);
  const std::size_t rows = g.out_h * g.out_w;
  const std::size_t depth = g.kh * g.kw * g.cin;
  if (grad_out.size() != s.n * rows * g.cout)
    throw DimensionError("conv2d backward: gradient shape " +
                         shape_string(grad_out.shape()) + " does not match output");
  const std::size_t in_stride = s.h * s.w * s.c;
  const bool pointwise = is_pointwise(g);
  auto& cols = scratch(0);
  auto& cols_t = scratch(1);
  auto& dcols = scratch(2);
  auto& kernel_t = scratch(3);
  if (grad_input) {
    kernel_t.resize(depth * g.cout);
    kernels::transpose(depth, g.cout, kernel.ptr(), g.cout, kernel_t.data());
  }
  for (std::size_t b = 0; b < s.n; ++b) {
    const float* image = input.ptr() + b * in_stride;
    const float* gy = grad_out.ptr() + b * rows * g.cout;
    if (grad_bias) column_sums_add(gy, rows, g.cout, grad_bias);
    if (grad_kernel) {
      const float* a = image;
      if (!pointwise) {
        cols.resize(rows * depth);
        im2col(image, g, cols.data());
        a = cols.data();
      }
      cols_t.resize(depth * rows);
      kernels::transpose(rows, depth, a, depth, cols_t.data());
      kernels::gemm(depth, g.cout, rows, cols_t.data(), rows, gy, g.cout,
                    grad_kernel, g.cout, true);
    }
    if (grad_input) {
      float* gx = grad_input + b * in_stride;
      if (pointwise) {
        kernels::gemm(rows, depth, g.cout, gy, g.cout, kernel_t.data(), depth, gx,
                      depth, true);
      } else {
        dcols.resize(rows * depth);
        kernels::gemm(rows, depth, g.cout, gy, g.cout, kernel_t.data(), depth,
                      dcols.data(), depth, false);
        col2im_add(dcols.data(), g, gx);
      }
    }
  }
  if (grad_kernel && faulty(fault_bit)) grad_kernel[0] += 0.5f;
}

}  // namespace

void conv2d_backward(const Tensor& input, const Tensor& kernel,
                     const Tensor& grad_out, std::size_t stride, Padding padding,
                     float* grad_input, float* grad_kernel, float* grad_bias) {
  conv_backward_impl(input, kernel, grad_out, stride, padding, grad_input,
                     grad_kernel, grad_bias, kFaultConv2d);
}

Tensor conv1x1(const Tensor& input, const Tensor& kernel, const Tensor& bias) {
  if (kernel.rank() != 4 || kernel.dim(0) != 1 || kernel.dim(1) != 1)
    throw DimensionError("conv1x1: kernel must be 1 x 1 x Cin x Cout, got " +
                         shape_string(kernel.shape()));
  return conv2d(input, kernel, bias, 1, Padding::valid);
}

void conv1x1_backward(const Tensor& input, const Tensor& kernel,
                      const Tensor& grad_out, float* grad_input,
                      float* grad_kernel, float* grad_bias) {
  conv_backward_impl(input, kernel, grad_out, 1, Padding::valid, grad_input,
                     grad_kernel, grad_bias, kFaultConv1x1);
}

Tensor maxpool2d(const Tensor& input) {
  const Spatial s = spatial_of(input, "maxpool2d");
  if (s.h < 2 || s.w < 2)
    throw DimensionError("maxpool2d: input " + shape_string(input.shape()) +
                         " smaller than the 2x2 window");
  const std::size_t oh = s.h / 2, ow = s.w / 2;
  Tensor out(spatial_shape(input, s.n, oh, ow, s.c));
  const float* x = input.ptr();
  float* y = out.ptr();
  for (std::size_t b = 0; b < s.n; ++b)
    for (std::size_t oy = 0; oy < oh; ++oy)
      for (std::size_t ox = 0; ox < ow; ++ox) {
        const float* p00 = x + ((b * s.h + 2 * oy) * s.w + 2 * ox) * s.c;
        const float* p01 = p00 + s.c;
        const float* p10 = p00 + s.w * s.c;
        const float* p11 = p10 + s.c;
        float* dst = y + ((b * oh + oy) * ow + ox) * s.c;
        for (std::size_t c = 0; c < s.c; ++c)
          dst[c] = std::max(std::max(p00[c], p01[c]), std::max(p10[c], p11[c]));
      }
  return out;
}

void maxpool2d_backward(const Tensor& input, const Tensor& grad_out,
                        float* grad_input) {
  if (!grad_input) return;
  const Spatial s = spatial_of(input, "maxpool2d");
  const std::size_t oh = s.h / 2, ow = s.w / 2;
  if (grad_out.size() != s.n * oh * ow * s.c)
    throw DimensionError("maxpool2d backward: gradient shape mismatch");
  const float* x = input.ptr();
  const float* gy = grad_out.ptr();
  for (std::size_t b = 0; b < s.n; ++b)
    for (std::size_t oy = 0; oy < oh; ++oy)
      for (std::size_t ox = 0; ox < ow; ++ox) {
        const std::size_t base = (b * s.h + 2 * oy) * s.w + 2 * ox;
        const std::size_t cells[4] = {base, base + 1, base + s.w, base + s.w + 1};
        const float* g = gy + ((b * oh + oy) * ow + ox) * s.c;
        for (std::size_t c = 0; c < s.c; ++c) {
          std::size_t best = cells[0];
          for (int k = 1; k < 4; ++k)
            if (x[cells[k] * s.c + c] > x[best * s.c + c]) best = cells[k];
          grad_input[best * s.c + c] += g[c];
        }
      }
}

namespace {

struct DenseDims {
  std::size_t batch, n, m;
};

DenseDims dense_dims(const Tensor& input, const Tensor& weights) {
  if (weights.rank() != 2)
    throw DimensionError("dense: weights must be n x m, got " +
                         shape_string(weights.shape()));
  std::size_t batch = 1, n = 0;
  if (input.rank() == 1) {
    n = input.dim(0);
  } else if (input.rank() == 2) {
    batch = input.dim(0);
    n = input.dim(1);
  } else {
    throw DimensionError("dense: expected vector or batch of vectors, got " +
                         shape_string(input.shape()));
  }
  if (n != weights.dim(0))
    throw DimensionError("dense: input length " + std::to_string(n) +
                         " does not match weight rows " + std::to_string(weights.dim(0)));
  return {batch, n, weights.dim(1)};
}

}  // namespace

Tensor dense(const Tensor& input, const Tensor& weights, const Tensor& bias) {
  const DenseDims d = dense_dims(input, weights);
  if (bias.rank() != 1 || bias.dim(0) != d.m)
    throw DimensionError("dense: bias shape " + shape_string(bias.shape()) +
                         " does not match " + std::to_string(d.m) + " outputs");
  Tensor out(input.rank() == 1 ? Shape{d.m} : Shape{d.batch, d.m});
  kernels::gemm(d.batch, d.m, d.n, input.ptr(), d.n, weights.ptr(), d.m, out.ptr(), d.m,
                false);
  add_bias_rows(out.ptr(), d.batch, bias);
  check_output(out, "dense");
  return out;
}

void dense_backward(const Tensor& input, const Tensor& weights,
                    const Tensor& grad_out, float* grad_input,
                    float* grad_weights, float* grad_bias) {
  const DenseDims d = dense_dims(input, weights);
  if (grad_out.size() != d.batch * d.m)
    throw DimensionError("dense backward: gradient shape mismatch");
  if (grad_bias) column_sums_add(grad_out.ptr(), d.batch, d.m, grad_bias);
  if (grad_weights) {
    auto& xt = scratch(1);
    xt.resize(d.n * d.batch);
    kernels::transpose(d.batch, d.n, input.ptr(), d.n, xt.data());
    kernels::gemm(d.n, d.m, d.batch, xt.data(), d.batch, grad_out.ptr(), d.m,
                  grad_weights, d.m, true);
    if (faulty(kFaultDense)) grad_weights[0] += 0.5f;
  }
  if (grad_input) {
    auto& wt = scratch(3);
    wt.resize(d.m * d.n);
    kernels::transpose(d.n, d.m, weights.ptr(), d.m, wt.data());
    kernels::gemm(d.batch, d.n, d.m, grad_out.ptr(), d.m, wt.data(), d.n, grad_input,
                  d.n, true);
  }
}

Tensor relu(const Tensor& input) {
  Tensor out(input.shape());
  kernels::relu_forward(input.data(), out.data());
  return out;
}

void relu_backward(const Tensor& input, const Tensor& grad_out, float* grad_input) {
  if (!grad_input) return;
  if (grad_out.size() != input.size())
    throw DimensionError("relu backward: gradient shape mismatch");
  kernels::relu_backward(input.data(), grad_out.data(), {grad_input, input.size()});
}

Tensor flatten(const Tensor& input) {
  if (input.rank() == 4)
    return input.reshaped({input.dim(0), input.dim(1) * input.dim(2) * input.dim(3)});
  return input.reshaped({input.size()});
}

float mse_loss(const Tensor& predicted, const Tensor& actual) {
  if (predicted.size() != actual.size())
    throw DimensionError("mse_loss: " + std::to_string(predicted.size()) +
                         " predictions vs " + std::to_string(actual.size()) + " targets");
  const std::size_t n = predicted.size();
  if (n == 0) throw EmptyBatchError("mse_loss: empty batch");
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double diff = static_cast<double>(actual[i]) - predicted[i];
    sum += diff * diff;
  }
  const float loss = static_cast<float>(sum / static_cast<double>(n));
  if (!std::isfinite(loss)) throw NumericError("non-finite value in mse_loss");
  return loss;
}

void mse_loss_backward(const Tensor& predicted, const Tensor& actual, float scale,
                       float* grad_predicted) {
  if (!grad_predicted) return;
  const std::size_t n = predicted.size();
  if (n == 0) throw EmptyBatchError("mse_loss: empty batch");
  const float k = 2.0f * scale / static_cast<float>(n);
  for (std::size_t i = 0; i < n; ++i) grad_predicted[i] += k * (predicted[i] - actual[i]);
}

namespace testing {

void inject_fault(std::string_view op) {
  unsigned bit = 0;
  if (op == "dense") bit = kFaultDense;
  else if (op == "conv2d") bit = kFaultConv2d;
  else if (op == "conv1x1") bit = kFaultConv1x1;
  else throw UsageError("no fault hook for op '" + std::string(op) + "'");
  g_faults.fetch_or(bit, std::memory_order_relaxed);
}

void clear_faults() noexcept { g_faults.store(0, std::memory_order_relaxed); }

}  // namespace testing

}  // namespace bcnet::ops
