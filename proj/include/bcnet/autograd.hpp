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

// Reverse-mode differentiation over the layer ops. A Tape records every op in
// execution order, so inputs always precede their consumers and a single
// reverse sweep visits each recorded op once.

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "bcnet/ops.hpp"
#include "bcnet/tensor.hpp"

namespace bcnet::ag {

class Tape;

// Handle to a value recorded on a tape.
struct Var {
  Tape* tape = nullptr;
  std::size_t id = 0;
};

class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  // Input data; never receives a gradient.
  Var constant(Tensor value);
  // Leaf bound to an external tensor. When trainable, backward() accumulates
  // into param.grad(); otherwise the tensor's grad is left untouched.
  Var parameter(Tensor& param, bool trainable);

  const Tensor& value(Var v) const;
  bool requires_grad(Var v) const { return nodes_.at(v.id).requires_grad; }
  // Gradient of the last backward() w.r.t. v; empty when none flowed.
  std::span<const float> grad(Var v) const { return nodes_.at(v.id).grad; }

  // Requires a single-element loss recorded on this tape.
  void backward(Var loss);

  std::size_t size() const noexcept { return nodes_.size(); }
  std::size_t last_backward_visits() const noexcept { return visits_; }

  using BackwardFn = std::function<void(Tape&, std::size_t self)>;
  Var record(Tensor value, const char* op, std::vector<std::size_t> inputs,
             BackwardFn backward);
  // Gradient buffer of node `id` sized to its value, or nullptr when the
  // node does not require a gradient.
  float* grad_buffer(std::size_t id);
  const Tensor& value(std::size_t id) const;
  std::span<const float> grad(std::size_t id) const { return nodes_.at(id).grad; }

 private:
  struct Node {
    Tensor owned;
    Tensor* param = nullptr;
    bool requires_grad = false;
    const char* op = "";
    std::vector<std::size_t> inputs;
    std::vector<float> grad;
    BackwardFn backward;
  };
  std::vector<Node> nodes_;
  std::size_t visits_ = 0;
};

Var conv2d(Var input, Var kernel, Var bias, std::size_t stride, ops::Padding padding);
Var conv1x1(Var input, Var kernel, Var bias);
Var maxpool2d(Var input);
Var dense(Var input, Var weights, Var bias);
Var relu(Var input);
Var flatten(Var input);
Var mse_loss(Var predicted, const Tensor& actual);
// sum(weights * input) as a scalar; projects non-scalar outputs for checks.
Var weighted_sum(Var input, const Tensor& weights);

}  // namespace bcnet::ag
