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
#include <vector>

#include "bcnet/error.hpp"
#include "bcnet/ops.hpp"
#include "bcnet/rng.hpp"

using bcnet::Shape;
using bcnet::Tensor;
namespace ops = bcnet::ops;

namespace {

Tensor random_tensor(Shape shape, std::uint64_t seed) {
  bcnet::Rng rng(seed);
  std::vector<float> v(bcnet::numel(shape));
  for (auto& x : v) x = rng.uniform(-1.0f, 1.0f);
  return Tensor(std::move(shape), std::move(v));
}

// Direct NHWC convolution in double, written independently of im2col.
std::vector<double> direct_conv(const Tensor& x, const Tensor& w, const Tensor& b,
                                std::size_t stride, ops::Padding pad) {
  const std::size_t n = x.dim(0), h = x.dim(1), wd = x.dim(2), cin = x.dim(3);
  const std::size_t kh = w.dim(0), kw = w.dim(1), cout = w.dim(3);
  std::size_t oh, ow, pt = 0, pl = 0;
  if (pad == ops::Padding::valid) {
    oh = (h - kh) / stride + 1;
    ow = (wd - kw) / stride + 1;
  } else {
    oh = (h + stride - 1) / stride;
    ow = (wd + stride - 1) / stride;
    const std::size_t th = std::max<long>(0, long((oh - 1) * stride + kh) - long(h));
    const std::size_t tw = std::max<long>(0, long((ow - 1) * stride + kw) - long(wd));
    pt = th / 2;
    pl = tw / 2;
  }
  std::vector<double> out(n * oh * ow * cout);
  for (std::size_t s = 0; s < n; ++s)
    for (std::size_t oy = 0; oy < oh; ++oy)
      for (std::size_t ox = 0; ox < ow; ++ox)
        for (std::size_t co = 0; co < cout; ++co) {
          double acc = b[co];
          for (std::size_t ky = 0; ky < kh; ++ky)
            for (std::size_t kx = 0; kx < kw; ++kx) {
              const long iy = long(oy * stride + ky) - long(pt);
              const long ix = long(ox * stride + kx) - long(pl);
              if (iy < 0 || ix < 0 || iy >= long(h) || ix >= long(wd)) continue;
              for (std::size_t ci = 0; ci < cin; ++ci)
                acc += double(x[((s * h + iy) * wd + ix) * cin + ci]) *
                       w[((ky * kw + kx) * cin + ci) * cout + co];
            }
          out[((s * oh + oy) * ow + ox) * cout + co] = acc;
        }
  return out;
}

}  // namespace

TEST(ConvGeometry, ValidAndSame) {
  auto g = ops::conv_geometry(66, 200, 3, 5, 5, 24, 2, ops::Padding::valid);
  EXPECT_EQ(g.out_h, 31u);
  EXPECT_EQ(g.out_w, 98u);
  g = ops::conv_geometry(7, 7, 1, 3, 3, 1, 2, ops::Padding::same);
  EXPECT_EQ(g.out_h, 4u);
  EXPECT_EQ(g.pad_top, 1u);
  g = ops::conv_geometry(6, 6, 1, 2, 2, 1, 1, ops::Padding::same);
  EXPECT_EQ(g.out_h, 6u);
  EXPECT_EQ(g.pad_top, 0u);  // the extra row goes to the bottom
  EXPECT_THROW(ops::conv_geometry(2, 9, 1, 3, 3, 1, 1, ops::Padding::valid),
               bcnet::DimensionError);
}

TEST(Conv2d, HandExample) {
  // 3x3 single-channel input, 2x2 kernel of ones, bias 1.
  Tensor x({3, 3, 1}, {1, 2, 3, 4, 5, 6, 7, 8, 9});
  Tensor w({2, 2, 1, 1}, {1, 1, 1, 1});
  Tensor b({1}, {1});
  Tensor y = ops::conv2d(x, w, b, 1, ops::Padding::valid);
  ASSERT_EQ(y.shape(), (Shape{2, 2, 1}));
  EXPECT_EQ(y[0], 13.0f);
  EXPECT_EQ(y[1], 17.0f);
  EXPECT_EQ(y[2], 25.0f);
  EXPECT_EQ(y[3], 29.0f);
}

TEST(Conv2d, MatchesDirectConvolution) {
  struct Case {
    Shape in;
    std::size_t k, cout, stride;
    ops::Padding pad;
  } cases[] = {{{2, 9, 11, 3}, 3, 4, 1, ops::Padding::valid},
               {{1, 13, 17, 2}, 5, 3, 2, ops::Padding::valid},
               {{2, 7, 8, 5}, 3, 6, 1, ops::Padding::same},
               {{1, 9, 9, 2}, 3, 2, 2, ops::Padding::same}};
  std::uint64_t seed = 10;
  for (const auto& c : cases) {
    Tensor x = random_tensor(c.in, seed++);
    Tensor w = random_tensor({c.k, c.k, c.in[3], c.cout}, seed++);
    Tensor b = random_tensor({c.cout}, seed++);
    Tensor y = ops::conv2d(x, w, b, c.stride, c.pad);
    auto ref = direct_conv(x, w, b, c.stride, c.pad);
    ASSERT_EQ(y.size(), ref.size());
    for (std::size_t i = 0; i < ref.size(); ++i) ASSERT_NEAR(y[i], ref[i], 1e-5) << i;
  }
}

TEST(Conv2d, RejectsChannelMismatch) {
  EXPECT_THROW(ops::conv2d(Tensor({5, 5, 3}), Tensor({3, 3, 2, 4}), Tensor({4}), 1,
                           ops::Padding::valid),
               bcnet::DimensionError);
  EXPECT_THROW(ops::conv2d(Tensor({5, 5, 3}), Tensor({3, 3, 3, 4}), Tensor({3}), 1,
                           ops::Padding::valid),
               bcnet::DimensionError);
}

TEST(Conv1x1, IsPerPixelMatrixProduct) {
  Tensor x({1, 2, 2}, {1, 2, 3, 4});  // two pixels, two channels
  Tensor w({1, 1, 2, 3}, {1, 0, 2, 0, 1, -1});
  Tensor b({3}, {0.5f, 0, 0});
  Tensor y = ops::conv1x1(x, w, b);
  ASSERT_EQ(y.shape(), (Shape{1, 2, 3}));
  const std::vector<float> expect{1.5f, 2, 0, 3.5f, 4, 2};
  for (std::size_t i = 0; i < 6; ++i) EXPECT_FLOAT_EQ(y[i], expect[i]);
  EXPECT_THROW(ops::conv1x1(x, Tensor({3, 3, 2, 3}), b), bcnet::DimensionError);
}

TEST(MaxPool, DropsOddTrailingEdgeAndPicksFirstMax) {
  Tensor x({3, 3, 1}, {1, 5, 9, 5, 2, 9, 9, 9, 9});
  Tensor y = ops::maxpool2d(x);
  ASSERT_EQ(y.shape(), (Shape{1, 1, 1}));
  EXPECT_EQ(y[0], 5.0f);
  Tensor g({1, 1, 1}, {1.0f});
  std::vector<float> gx(9, 0.0f);
  ops::maxpool2d_backward(x, g, gx.data());
  EXPECT_EQ(gx, (std::vector<float>{0, 1, 0, 0, 0, 0, 0, 0, 0}));
}

TEST(Dense, HandExample) {
  Tensor x({2, 2}, {1, 2, 3, 4});
  Tensor w({2, 3}, {1, 0, -1, 0, 1, 2});
  Tensor b({3}, {0, 1, 0});
  Tensor y = ops::dense(x, w, b);
  ASSERT_EQ(y.shape(), (Shape{2, 3}));
  EXPECT_EQ(std::vector<float>(y.data().begin(), y.data().end()),
            (std::vector<float>{1, 3, 3, 3, 5, 5}));
}

TEST(Relu, ForwardBackward) {
  Tensor x({4}, {-1, 0, 2, -3});
  Tensor y = ops::relu(x);
  EXPECT_EQ(std::vector<float>(y.data().begin(), y.data().end()),
            (std::vector<float>{0, 0, 2, 0}));
  std::vector<float> gx(4, 1.0f);
  ops::relu_backward(x, Tensor({4}, {5, 5, 5, 5}), gx.data());
  EXPECT_EQ(gx, (std::vector<float>{1, 1, 6, 1}));
}

TEST(Flatten, KeepsBatchAxis) {
  EXPECT_EQ(ops::flatten(Tensor({2, 3, 4})).shape(), (Shape{24}));
  EXPECT_EQ(ops::flatten(Tensor({5, 2, 3, 4})).shape(), (Shape{5, 24}));
}

TEST(MseLoss, ArithmeticAndErrors) {
  EXPECT_FLOAT_EQ(ops::mse_loss(Tensor({2}, {0, 0}), Tensor({2}, {10, 10})), 100.0f);
  EXPECT_FLOAT_EQ(ops::mse_loss(Tensor({3}, {1, 2, 3}), Tensor({3}, {1, 2, 6})), 3.0f);
  EXPECT_THROW(ops::mse_loss(Tensor({2}), Tensor({3})), bcnet::DimensionError);
  std::vector<float> g(2, 0.0f);
  ops::mse_loss_backward(Tensor({2}, {1, 3}), Tensor({2}, {0, 0}), 1.0f, g.data());
  EXPECT_EQ(g, (std::vector<float>{1, 3}));
}

TEST(ParamCounts, Formulae) {
  EXPECT_EQ(ops::conv_param_count(5, 5, 3, 24), 1824u);
  EXPECT_EQ(ops::conv_param_count(1, 1, 64, 32), 2080u);
  EXPECT_EQ(ops::dense_param_count(1152, 100), 115300u);
}

TEST(FaultInjection, UnknownOpRejected) {
  EXPECT_THROW(ops::testing::inject_fault("softmax"), bcnet::UsageError);
}
