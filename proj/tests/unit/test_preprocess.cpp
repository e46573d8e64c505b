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

#include <gtest/gtest.h>

#include <cmath>
#include <cstring>
#include <fstream>

#include "bcnet/error.hpp"
#include "bcnet/image.hpp"
#include "bcnet/preprocess.hpp"
#include "bcnet/rng.hpp"

using namespace bcnet;

namespace {

RawFrame solid(std::size_t h, std::size_t w, std::uint8_t r, std::uint8_t g, std::uint8_t b) {
  std::vector<std::uint8_t> px(h * w * 3);
  for (std::size_t i = 0; i < px.size(); i += 3) {
    px[i] = r;
    px[i + 1] = g;
    px[i + 2] = b;
  }
  return RawFrame(h, w, std::move(px));
}

RawFrame noise(std::size_t h, std::size_t w, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<std::uint8_t> px(h * w * 3);
  for (auto& p : px) p = static_cast<std::uint8_t>(rng.below(256));
  return RawFrame(h, w, std::move(px));
}

}  // namespace

TEST(Crop, RemovesFloorOfFractionRows) {
  RawFrame f = noise(160, 4, 1);
  RawFrame c = crop(f, 0.35);
  EXPECT_EQ(c.height, 104u);  // 56 rows removed
  EXPECT_EQ(0, std::memcmp(c.pixel(0, 0), f.pixel(56, 0), 4 * 3));
  EXPECT_EQ(crop(f, 0.0).height, 160u);
}

TEST(Crop, RejectsBadFractions) {
  RawFrame f = noise(10, 4, 2);
  EXPECT_THROW(crop(f, -0.1), CropError);
  EXPECT_THROW(crop(f, 0.95), CropError);
  EXPECT_THROW(crop(noise(3, 4, 3), 0.67), CropError);  // one row would remain
}

TEST(Yuv, AchromaticFixedPoints) {
  const FloatImage white = rgb_to_yuv(solid(1, 1, 255, 255, 255));
  EXPECT_NEAR(white.data[0], 1.0f, 1e-6f);
  EXPECT_NEAR(white.data[1], 0.5f, 1e-6f);
  EXPECT_NEAR(white.data[2], 0.5f, 1e-6f);
  const FloatImage black = rgb_to_yuv(solid(1, 1, 0, 0, 0));
  EXPECT_NEAR(black.data[0], 0.0f, 1e-6f);
  EXPECT_NEAR(black.data[1], 0.5f, 1e-6f);
  EXPECT_NEAR(black.data[2], 0.5f, 1e-6f);
  const FloatImage grey = rgb_to_yuv(solid(1, 1, 128, 128, 128));
  EXPECT_NEAR(grey.data[0], 128.0f / 255.0f, 1e-6f);
  EXPECT_NEAR(grey.data[1], 0.5f, 1e-6f);
}

TEST(Yuv, SaturatedPrimariesStayInRange) {
  for (auto [r, g, b] : {std::tuple{255, 0, 0}, {0, 255, 0}, {0, 0, 255}}) {
    const FloatImage y = rgb_to_yuv(solid(1, 1, r, g, b));
    for (float v : y.data) {
      EXPECT_GE(v, 0.0f);
      EXPECT_LE(v, 1.0f);
    }
  }
  // Pure blue drives U to its maximum.
  EXPECT_NEAR(rgb_to_yuv(solid(1, 1, 0, 0, 255)).data[1], 1.0f, 1e-6f);
}

TEST(Resize, CornersAreExact) {
  FloatImage img = rgb_to_yuv(noise(50, 70, 4));
  FloatImage out = resize_bilinear(img, 66, 200);
  for (std::size_t c = 0; c < 3; ++c) {
    EXPECT_EQ(out.at(0, 0, c), img.at(0, 0, c));
    EXPECT_EQ(out.at(65, 199, c), img.at(49, 69, c));
    EXPECT_EQ(out.at(0, 199, c), img.at(0, 69, c));
  }
}

TEST(Resize, ConstantImageStaysConstant) {
  FloatImage img = rgb_to_yuv(solid(9, 9, 10, 200, 30));
  FloatImage out = resize_bilinear(img, 66, 200);
  for (std::size_t i = 0; i < out.data.size(); ++i)
    ASSERT_NEAR(out.data[i], img.data[i % 3], 1e-7f);
}

TEST(Resize, TooSmallInput) {
  FloatImage img = rgb_to_yuv(solid(1, 5, 0, 0, 0));
  EXPECT_THROW(resize_bilinear(img), DimensionError);
}

TEST(Preprocess, ShapeAndRangeForManySizes) {
  const std::size_t sizes[][2] = {{160, 320}, {66, 200}, {4, 3}, {480, 640}, {123, 77}};
  std::uint64_t seed = 10;
  for (const auto& s : sizes) {
    const PreprocessedFrame f = preprocess(noise(s[0], s[1], seed++));
    ASSERT_EQ(f.tensor().shape(), (Shape{66, 200, 3}));
    for (float v : f.tensor().data()) {
      ASSERT_GE(v, 0.0f);
      ASSERT_LE(v, 1.0f);
    }
  }
}

TEST(Preprocess, FrameRejectsOutOfRange) {
  EXPECT_THROW(PreprocessedFrame(Tensor({66, 200, 3}, std::vector<float>(66 * 200 * 3, 1.5f))),
               NumericError);
  EXPECT_THROW(PreprocessedFrame(Tensor({66, 200, 1})), DimensionError);
}

TEST(Preprocess, MatchesGoldenFixture) {
  const RawFrame input = load_image(BCNET_FIXTURE_DIR "/preprocess_input.png");
  ASSERT_EQ(input.height, 160u);
  ASSERT_EQ(input.width, 320u);
  std::ifstream in(BCNET_FIXTURE_DIR "/preprocess_expected.f32", std::ios::binary);
  std::vector<float> expected(66 * 200 * 3);
  in.read(reinterpret_cast<char*>(expected.data()), expected.size() * sizeof(float));
  ASSERT_TRUE(in) << "fixture missing";

  const PreprocessedFrame out = preprocess(input);
  double max_diff = 0.0;
  std::size_t differing = 0;
  for (std::size_t i = 0; i < expected.size(); ++i) {
    max_diff = std::max(max_diff, std::abs(double(out.tensor()[i]) - expected[i]));
    differing += std::memcmp(out.tensor().ptr() + i, &expected[i], sizeof(float)) != 0;
  }
  EXPECT_LE(max_diff, 1e-6);
  EXPECT_EQ(differing, 0u) << "output drifted from the frozen fixture";
}

TEST(FlipAugment, InvolutionWithAngleNegation) {
  const PreprocessedFrame f = preprocess(noise(80, 120, 7));
  auto [once, a1] = flip_augment(f, 12.5f);
  EXPECT_EQ(a1, -12.5f);
  EXPECT_FALSE(once.tensor().bit_equal(f.tensor()));
  EXPECT_EQ(once.at(3, 0, 1), f.at(3, 199, 1));
  auto [twice, a2] = flip_augment(once, a1);
  EXPECT_EQ(a2, 12.5f);
  EXPECT_TRUE(twice.tensor().bit_equal(f.tensor()));
}
