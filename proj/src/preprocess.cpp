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

#include "bcnet/preprocess.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "bcnet/error.hpp"
#include "bcnet/model_zoo.hpp"

namespace bcnet {

PreprocessedFrame::PreprocessedFrame(Tensor tensor) : tensor_(std::move(tensor)) {
  const Shape want{kFrameHeight, kFrameWidth, kFrameChannels};
  if (tensor_.shape() != want)
    throw DimensionError("preprocessed frame must be " + shape_string(want) + ", got " +
                         shape_string(tensor_.shape()));
  for (float v : tensor_.data())
    if (!(v >= 0.0f && v <= 1.0f))
      throw NumericError("preprocessed frame value outside [0, 1]");
}

float PreprocessedFrame::at(std::size_t y, std::size_t x, std::size_t c) const {
  return tensor_[(y * kFrameWidth + x) * kFrameChannels + c];
}

RawFrame crop(const RawFrame& frame, double top_fraction) {
  if (!(top_fraction >= 0.0 && top_fraction <= 0.9))
    throw CropError("crop fraction " + std::to_string(top_fraction) + " outside [0, 0.9]");
  const auto removed = static_cast<std::size_t>(
      std::floor(top_fraction * static_cast<double>(frame.height) + 1e-9));
  if (removed >= frame.height || frame.height - removed < 2)
    throw CropError("cropping " + std::to_string(removed) + " of " +
                    std::to_string(frame.height) + " rows leaves fewer than 2");
  const std::size_t row_bytes = frame.width * 3;
  return RawFrame(frame.height - removed, frame.width,
                  std::vector<std::uint8_t>(frame.rgb.begin() + removed * row_bytes,
                                            frame.rgb.end()));
}

FloatImage rgb_to_yuv(const RawFrame& frame) {
  FloatImage out{frame.height, frame.width, std::vector<float>(frame.rgb.size())};
  auto unit = [](double v) { return static_cast<float>(std::clamp(v, 0.0, 1.0)); };
  for (std::size_t i = 0; i < frame.rgb.size(); i += 3) {
    const double r = frame.rgb[i] / 255.0;
    const double g = frame.rgb[i + 1] / 255.0;
    const double b = frame.rgb[i + 2] / 255.0;
    out.data[i] = unit(0.299 * r + 0.587 * g + 0.114 * b);
    out.data[i + 1] = unit(0.5 - 0.168736 * r - 0.331264 * g + 0.5 * b);
    out.data[i + 2] = unit(0.5 + 0.5 * r - 0.418688 * g - 0.081312 * b);
  }
  return out;
}

FloatImage resize_bilinear(const FloatImage& image, std::size_t out_h, std::size_t out_w) {
  if (image.height < 2 || image.width < 2)
    throw DimensionError("resize_bilinear: input " + std::to_string(image.height) + "x" +
                         std::to_string(image.width) + " is smaller than 2x2");
  if (out_h == 0 || out_w == 0) throw DimensionError("resize_bilinear: empty output");
  FloatImage out{out_h, out_w, std::vector<float>(out_h * out_w * 3)};
  auto source = [](std::size_t i, std::size_t in, std::size_t n) {
    return n == 1 ? 0.0
                  : static_cast<double>(i) * static_cast<double>(in - 1) /
                        static_cast<double>(n - 1);
  };
  for (std::size_t y = 0; y < out_h; ++y) {
    const double sy = source(y, image.height, out_h);
    const std::size_t y0 = std::min(static_cast<std::size_t>(sy), image.height - 1);
    const std::size_t y1 = std::min(y0 + 1, image.height - 1);
    const double fy = sy - static_cast<double>(y0);
    for (std::size_t x = 0; x < out_w; ++x) {
      const double sx = source(x, image.width, out_w);
      const std::size_t x0 = std::min(static_cast<std::size_t>(sx), image.width - 1);
      const std::size_t x1 = std::min(x0 + 1, image.width - 1);
      const double fx = sx - static_cast<double>(x0);
      for (std::size_t c = 0; c < 3; ++c) {
        const double top = (1.0 - fx) * image.at(y0, x0, c) + fx * image.at(y0, x1, c);
        const double bottom = (1.0 - fx) * image.at(y1, x0, c) + fx * image.at(y1, x1, c);
        out.data[(y * out_w + x) * 3 + c] = static_cast<float>((1.0 - fy) * top + fy * bottom);
      }
    }
  }
  return out;
}

PreprocessedFrame preprocess(const RawFrame& frame, const PreprocessConfig& config) {
  FloatImage resized =
      resize_bilinear(rgb_to_yuv(crop(frame, config.top_fraction)), kFrameHeight, kFrameWidth);
  return PreprocessedFrame(
      Tensor({kFrameHeight, kFrameWidth, kFrameChannels}, std::move(resized.data)));
}

std::pair<PreprocessedFrame, float> flip_augment(const PreprocessedFrame& frame,
                                                 float angle_deg) {
  const Tensor& src = frame.tensor();
  Tensor out(src.shape());
  for (std::size_t y = 0; y < kFrameHeight; ++y)
    for (std::size_t x = 0; x < kFrameWidth; ++x) {
      const float* from = src.ptr() + (y * kFrameWidth + (kFrameWidth - 1 - x)) * 3;
      float* to = out.ptr() + (y * kFrameWidth + x) * 3;
      std::copy(from, from + 3, to);
    }
  return {PreprocessedFrame(std::move(out)), -angle_deg};
}

}  // namespace bcnet
