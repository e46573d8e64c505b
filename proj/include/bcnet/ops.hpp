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

// Forward and backward passes of the layer operations, as plain functions on
// tensors. Spatial tensors are HWC (rank 3) or NHWC (rank 4); dense inputs are
// a vector (rank 1) or a batch of row vectors (rank 2). Backward functions
// accumulate into the supplied gradient buffers; a null buffer is skipped.

#include <cstddef>
#include <string_view>

#include "bcnet/tensor.hpp"

namespace bcnet::ops {

enum class Padding { valid, same };

const char* padding_name(Padding p) noexcept;

struct ConvGeometry {
  std::size_t in_h, in_w, cin;
  std::size_t kh, kw, cout;
  std::size_t stride;
  std::size_t pad_top, pad_left;
  std::size_t out_h, out_w;
};

// valid: out = floor((in - k) / stride) + 1, requires k <= in.
// same:  out = ceil(in / stride), zero padding split with the extra row or
//        column at the bottom/right.
ConvGeometry conv_geometry(std::size_t in_h, std::size_t in_w, std::size_t cin,
                           std::size_t kh, std::size_t kw, std::size_t cout,
                           std::size_t stride, Padding padding);

// kernel: kh x kw x Cin x Cout, bias: Cout.
Tensor conv2d(const Tensor& input, const Tensor& kernel, const Tensor& bias,
              std::size_t stride, Padding padding);
void conv2d_backward(const Tensor& input, const Tensor& kernel,
                     const Tensor& grad_out, std::size_t stride, Padding padding,
                     float* grad_input, float* grad_kernel, float* grad_bias);

// Pointwise channel projection; kernel must be 1 x 1 x Cin x Cout.
Tensor conv1x1(const Tensor& input, const Tensor& kernel, const Tensor& bias);
void conv1x1_backward(const Tensor& input, const Tensor& kernel,
                      const Tensor& grad_out, float* grad_input,
                      float* grad_kernel, float* grad_bias);

// 2x2 window, stride 2, trailing odd row/column dropped.
Tensor maxpool2d(const Tensor& input);
// Routes each output gradient to the first maximal cell in row-major order.
void maxpool2d_backward(const Tensor& input, const Tensor& grad_out,
                        float* grad_input);

// weights: n x m, bias: m.
Tensor dense(const Tensor& input, const Tensor& weights, const Tensor& bias);
void dense_backward(const Tensor& input, const Tensor& weights,
                    const Tensor& grad_out, float* grad_input,
                    float* grad_weights, float* grad_bias);

Tensor relu(const Tensor& input);
void relu_backward(const Tensor& input, const Tensor& grad_out, float* grad_input);

// HWC -> H*W*C, NHWC -> N x H*W*C.
Tensor flatten(const Tensor& input);

// (1/n) * sum (actual - predicted)^2, accumulated in double.
float mse_loss(const Tensor& predicted, const Tensor& actual);
// grad_predicted += scale * 2 (predicted - actual) / n
void mse_loss_backward(const Tensor& predicted, const Tensor& actual,
                       float scale, float* grad_predicted);

std::size_t conv_param_count(std::size_t kh, std::size_t kw, std::size_t cin,
                             std::size_t cout) noexcept;
std::size_t dense_param_count(std::size_t n, std::size_t m) noexcept;

namespace testing {
// Corrupts the weight gradient of the named op ("dense", "conv2d",
// "conv1x1") so that gradient checking can be shown to catch it.
void inject_fault(std::string_view op);
void clear_faults() noexcept;
}  // namespace testing

}  // namespace bcnet::ops
