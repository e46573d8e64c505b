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

// Central finite-difference verification of the engine's analytic gradients.
// The numeric side evaluates an independent double-precision reference of
// each op, so float32 rounding in the engine does not pollute the oracle.

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace bcnet::gradcheck {

struct Options {
  std::size_t instances = 20;
  double step = 1e-3;
  double tolerance = 1e-4;
  std::uint64_t seed = 20240607;
};

struct OpReport {
  std::string op;
  std::size_t instances = 0;
  std::size_t elements = 0;  // gradient entries compared
  double max_relative_error = 0.0;
  bool passed = false;
};

// |a - n| / max(|a|, |n|, 1e-2); the floor keeps entries whose true
// gradient is ~0 from dividing float32 rounding noise by ~0.
double relative_error(double analytic, double numeric) noexcept;

// Ops: conv2d, conv1x1, maxpool2d, dense, relu, flatten, mse_loss, and
// "composite" (conv -> relu -> pool -> dense -> mse on an 8x8x2 input).
const std::vector<std::string>& op_names();

OpReport check_op(std::string_view op, const Options& options = {});
std::vector<OpReport> check_all(const Options& options = {});

}  // namespace bcnet::gradcheck
