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

// Camera frame -> network input: crop the top rows, convert to YUV, resize
// to 66x200. Output channels are Y, U, V, each in [0, 1].

#include <cstddef>
#include <utility>
#include <vector>

#include "bcnet/image.hpp"
#include "bcnet/tensor.hpp"

namespace bcnet {

// Three-channel float image, row-major HWC.
struct FloatImage {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<float> data;

  float at(std::size_t y, std::size_t x, std::size_t c) const {
    return data[(y * width + x) * 3 + c];
  }
};

struct PreprocessConfig {
  double top_fraction = 0.35;
};

// A 66x200x3 tensor with every value in [0, 1].
class PreprocessedFrame {
 public:
  // Throws DimensionError on the wrong shape, NumericError on out-of-range values.
  explicit PreprocessedFrame(Tensor tensor);

  const Tensor& tensor() const noexcept { return tensor_; }
  float at(std::size_t y, std::size_t x, std::size_t c) const;

 private:
  Tensor tensor_;
};

// Drops floor(top_fraction * height) rows from the top. top_fraction must lie
// in [0, 0.9] and at least two rows must remain, otherwise CropError.
RawFrame crop(const RawFrame& frame, double top_fraction);

// Full-range BT.601 on [0,1]-scaled RGB with +0.5 chroma offset:
//   Y = 0.299 R + 0.587 G + 0.114 B
//   U = 0.5 - 0.168736 R - 0.331264 G + 0.5 B
//   V = 0.5 + 0.5 R - 0.418688 G - 0.081312 B
FloatImage rgb_to_yuv(const RawFrame& frame);

// Corner-aligned bilinear: output (0,0) and (H'-1,W'-1) sample the input
// corners exactly. Needs a >= 2x2 input.
FloatImage resize_bilinear(const FloatImage& image, std::size_t out_h = 66,
                           std::size_t out_w = 200);

PreprocessedFrame preprocess(const RawFrame& frame, const PreprocessConfig& config = {});

// Horizontal mirror; the steering angle changes sign.
std::pair<PreprocessedFrame, float> flip_augment(const PreprocessedFrame& frame,
                                                 float angle_deg);

}  // namespace bcnet
