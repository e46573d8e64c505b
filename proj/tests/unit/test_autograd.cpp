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

#include "bcnet/adam.hpp"
#include "bcnet/autograd.hpp"
#include "bcnet/error.hpp"
#include "bcnet/gradcheck.hpp"
#include "bcnet/ops.hpp"

using bcnet::Tensor;
namespace ag = bcnet::ag;
namespace gc = bcnet::gradcheck;

TEST(Tape, BackwardNeedsScalarLoss) {
  ag::Tape tape;
  Tensor w({2, 2}, {1, 2, 3, 4});
  auto x = tape.constant(Tensor({1, 2}, {1, 1}));
  auto y = ag::dense(x, tape.parameter(w, true), tape.constant(Tensor({2})));
  EXPECT_THROW(tape.backward(y), bcnet::UsageError);
}

TEST(Tape, DenseGradientByHand) {
  ag::Tape tape;
  Tensor w({2, 1}, {2, -1});
  Tensor b({1}, {0.5f});
  auto x = tape.constant(Tensor({1, 2}, {3, 4}));
  auto y = ag::dense(x, tape.parameter(w, true), tape.parameter(b, true));
  auto loss = ag::mse_loss(y, Tensor({1}, {0}));  // (6 - 4 + 0.5)^2
  tape.backward(loss);
  EXPECT_FLOAT_EQ(tape.value(loss)[0], 6.25f);
  // dL/dy = 2 * 2.5 = 5
  EXPECT_FLOAT_EQ(w.grad()[0], 15.0f);
  EXPECT_FLOAT_EQ(w.grad()[1], 20.0f);
  EXPECT_FLOAT_EQ(b.grad()[0], 5.0f);
}

TEST(Tape, FrozenParameterGetsNoGradient) {
  ag::Tape tape;
  Tensor frozen({2, 2}, {1, 0, 0, 1});
  Tensor head({2, 1}, {1, 1});
  auto x = tape.constant(Tensor({1, 2}, {1, 2}));
  auto h = ag::dense(x, tape.parameter(frozen, false), tape.constant(Tensor({2})));
  auto y = ag::dense(h, tape.parameter(head, true), tape.constant(Tensor({1})));
  tape.backward(ag::mse_loss(y, Tensor({1}, {0})));
  EXPECT_FALSE(frozen.has_grad());
  EXPECT_TRUE(head.has_grad());
  // Nothing upstream of the frozen layer needs a gradient, so its backward
  // is never visited.
  EXPECT_LT(tape.last_backward_visits(), tape.size());
}

TEST(Tape, GradientsAccumulateAcrossUses) {
  ag::Tape tape;
  Tensor w({1, 1}, {3});
  auto p = tape.parameter(w, true);
  auto a = ag::dense(tape.constant(Tensor({1, 1}, {1})), p, tape.constant(Tensor({1})));
  auto b = ag::dense(a, p, tape.constant(Tensor({1})));  // y = w * w
  tape.backward(ag::weighted_sum(b, Tensor({1}, {1})));
  EXPECT_FLOAT_EQ(w.grad()[0], 6.0f);
}

TEST(GradCheck, RelativeErrorFloor) {
  EXPECT_DOUBLE_EQ(gc::relative_error(1.0, 1.0), 0.0);
  EXPECT_DOUBLE_EQ(gc::relative_error(2.0, 1.0), 0.5);
  EXPECT_DOUBLE_EQ(gc::relative_error(1e-6, 0.0), 1e-4);
}

TEST(GradCheck, EveryOpPasses) {
  for (const auto& r : gc::check_all()) {
    EXPECT_TRUE(r.passed) << r.op << " max relative error " << r.max_relative_error;
    EXPECT_GE(r.instances, 20u) << r.op;
    EXPECT_GT(r.elements, 0u) << r.op;
  }
}

TEST(GradCheck, ReportsInjectedFault) {
  for (const char* op : {"dense", "conv2d", "conv1x1"}) {
    bcnet::ops::testing::inject_fault(op);
    const auto r = gc::check_op(op);
    bcnet::ops::testing::clear_faults();
    EXPECT_FALSE(r.passed) << op;
    EXPECT_EQ(r.op, op);
  }
  EXPECT_TRUE(gc::check_op("dense").passed);
}

TEST(GradCheck, UnknownOp) { EXPECT_THROW(gc::check_op("softmax"), bcnet::UsageError); }

TEST(Adam, FirstStepMovesByLearningRate) {
  // With bias correction, step one is lr * g / (|g| + eps) = lr * sign(g).
  Tensor p({3}, {1, 1, 1});
  std::vector<Tensor*> params{&p};
  bcnet::AdamState state(bcnet::AdamConfig{}, params);
  p.grad()[0] = 4.0f;
  p.grad()[1] = -0.5f;
  bcnet::adam_step(params, state);
  EXPECT_NEAR(p[0], 1.0f - 1e-3f, 1e-7f);
  EXPECT_NEAR(p[1], 1.0f + 1e-3f, 1e-7f);
  EXPECT_EQ(p[2], 1.0f);
  EXPECT_EQ(state.step, 1u);
}

TEST(Adam, MatchesDoubleReferenceOverSteps) {
  const float g0[] = {0.3f, -1.2f, 2.5f, -0.01f};
  Tensor p({4}, {0.5f, -0.5f, 1.0f, 0.0f});
  std::vector<Tensor*> params{&p};
  bcnet::AdamConfig cfg;
  cfg.lr = 1e-2f;
  bcnet::AdamState state(cfg, params);
  double rp[4], rm[4] = {}, rv[4] = {};
  for (int i = 0; i < 4; ++i) rp[i] = p[i];
  for (int t = 1; t <= 10; ++t) {
    for (int i = 0; i < 4; ++i) p.grad()[i] = g0[i] * float(t % 3 + 1);
    bcnet::adam_step(params, state);
    for (int i = 0; i < 4; ++i) {
      const double g = g0[i] * double(t % 3 + 1);
      rm[i] = 0.9 * rm[i] + 0.1 * g;
      rv[i] = 0.999 * rv[i] + 0.001 * g * g;
      const double mh = rm[i] / (1 - std::pow(0.9, t));
      const double vh = rv[i] / (1 - std::pow(0.999, t));
      rp[i] -= 1e-2 * mh / (std::sqrt(vh) + 1e-8);
    }
  }
  for (int i = 0; i < 4; ++i) EXPECT_NEAR(p[i], rp[i], 1e-5) << i;
}

TEST(Adam, ShapeMismatchAndBadConfig) {
  Tensor p({2});
  std::vector<Tensor*> params{&p};
  bcnet::AdamState state(bcnet::AdamConfig{}, params);
  std::vector<float> g(3);
  std::vector<std::span<const float>> grads{g};
  EXPECT_THROW(bcnet::adam_step(params, grads, state), bcnet::DimensionError);
  bcnet::AdamConfig bad;
  bad.lr = 0.0f;
  EXPECT_THROW(bcnet::AdamState(bad, params), bcnet::UsageError);
}
