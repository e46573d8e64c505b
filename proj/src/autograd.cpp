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

#include "bcnet/autograd.hpp"

#include <algorithm>

#include "bcnet/error.hpp"
#include "bcnet/kernels.hpp"

namespace bcnet::ag {

Var Tape::constant(Tensor value) {
  Node node;
  node.owned = std::move(value);
  node.op = "constant";
  nodes_.push_back(std::move(node));
  return {this, nodes_.size() - 1};
}

Var Tape::parameter(Tensor& param, bool trainable) {
  Node node;
  node.param = &param;
  node.requires_grad = trainable;
  node.op = "parameter";
  nodes_.push_back(std::move(node));
  return {this, nodes_.size() - 1};
}

const Tensor& Tape::value(std::size_t id) const {
  const Node& n = nodes_.at(id);
  return n.param ? *n.param : n.owned;
}

const Tensor& Tape::value(Var v) const {
  if (v.tape != this) throw UsageError("variable belongs to a different tape");
  return value(v.id);
}

Var Tape::record(Tensor value, const char* op, std::vector<std::size_t> inputs,
                 BackwardFn backward) {
  Node node;
  node.owned = std::move(value);
  node.op = op;
  for (auto in : inputs) {
    if (in >= nodes_.size()) throw UsageError("op input recorded after its consumer");
    node.requires_grad = node.requires_grad || nodes_[in].requires_grad;
  }
  node.inputs = std::move(inputs);
  if (node.requires_grad) node.backward = std::move(backward);
  nodes_.push_back(std::move(node));
  return {this, nodes_.size() - 1};
}

float* Tape::grad_buffer(std::size_t id) {
  Node& n = nodes_.at(id);
  if (!n.requires_grad) return nullptr;
  const std::size_t len = value(id).size();
  if (n.grad.size() != len) n.grad.assign(len, 0.0f);
  return n.grad.data();
}

void Tape::backward(Var loss) {
  if (loss.tape != this) throw UsageError("loss belongs to a different tape");
  if (value(loss.id).size() != 1)
    throw UsageError("backward needs a scalar loss, got shape " +
                     shape_string(value(loss.id).shape()));
  for (auto& n : nodes_) n.grad.clear();
  visits_ = 0;
  if (!nodes_[loss.id].requires_grad) return;
  nodes_[loss.id].grad.assign(1, 1.0f);
  for (std::size_t i = loss.id + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (!n.requires_grad || n.grad.empty()) continue;
    if (n.param) {
      kernels::accumulate(n.grad, n.param->grad());
      continue;
    }
    if (n.backward) {
      ++visits_;
      n.backward(*this, i);
    }
  }
}

namespace {

// Wraps a gradient span as a tensor view for the ops backward functions.
Tensor grad_tensor(const Tape& tape, std::size_t id) {
  const auto g = tape.grad(id);
  return Tensor(tape.value(id).shape(), std::vector<float>(g.begin(), g.end()));
}

void require_same_tape(std::initializer_list<Var> vars) {
  const Tape* t = vars.begin()->tape;
  if (!t) throw UsageError("variable is not bound to a tape");
  for (const Var& v : vars)
    if (v.tape != t) throw UsageError("variables from different tapes");
}

}  // namespace

Var conv2d(Var input, Var kernel, Var bias, std::size_t stride, ops::Padding padding) {
  require_same_tape({input, kernel, bias});
  Tape& t = *input.tape;
  Tensor out = ops::conv2d(t.value(input), t.value(kernel), t.value(bias), stride, padding);
  const std::size_t x = input.id, k = kernel.id, b = bias.id;
  return t.record(std::move(out), "conv2d", {x, k, b},
                  [x, k, b, stride, padding](Tape& tp, std::size_t self) {
                    const Tensor gy = grad_tensor(tp, self);
                    ops::conv2d_backward(tp.value(x), tp.value(k), gy, stride, padding,
                                         tp.grad_buffer(x), tp.grad_buffer(k),
                                         tp.grad_buffer(b));
                  });
}

Var conv1x1(Var input, Var kernel, Var bias) {
  require_same_tape({input, kernel, bias});
  Tape& t = *input.tape;
  Tensor out = ops::conv1x1(t.value(input), t.value(kernel), t.value(bias));
  const std::size_t x = input.id, k = kernel.id, b = bias.id;
  return t.record(std::move(out), "conv1x1", {x, k, b},
                  [x, k, b](Tape& tp, std::size_t self) {
                    const Tensor gy = grad_tensor(tp, self);
                    ops::conv1x1_backward(tp.value(x), tp.value(k), gy, tp.grad_buffer(x),
                                          tp.grad_buffer(k), tp.grad_buffer(b));
                  });
}

Var maxpool2d(Var input) {
  Tape& t = *input.tape;
  const std::size_t x = input.id;
  return t.record(ops::maxpool2d(t.value(input)), "maxpool2d", {x},
                  [x](Tape& tp, std::size_t self) {
                    ops::maxpool2d_backward(tp.value(x), grad_tensor(tp, self),
                                            tp.grad_buffer(x));
                  });
}

Var dense(Var input, Var weights, Var bias) {
  require_same_tape({input, weights, bias});
  Tape& t = *input.tape;
  Tensor out = ops::dense(t.value(input), t.value(weights), t.value(bias));
  const std::size_t x = input.id, w = weights.id, b = bias.id;
  return t.record(std::move(out), "dense", {x, w, b},
                  [x, w, b](Tape& tp, std::size_t self) {
                    ops::dense_backward(tp.value(x), tp.value(w), grad_tensor(tp, self),
                                        tp.grad_buffer(x), tp.grad_buffer(w),
                                        tp.grad_buffer(b));
                  });
}

Var relu(Var input) {
  Tape& t = *input.tape;
  const std::size_t x = input.id;
  return t.record(ops::relu(t.value(input)), "relu", {x},
                  [x](Tape& tp, std::size_t self) {
                    ops::relu_backward(tp.value(x), grad_tensor(tp, self),
                                       tp.grad_buffer(x));
                  });
}

Var flatten(Var input) {
  Tape& t = *input.tape;
  const std::size_t x = input.id;
  return t.record(ops::flatten(t.value(input)), "flatten", {x},
                  [x](Tape& tp, std::size_t self) {
                    kernels::accumulate(tp.grad(self), {tp.grad_buffer(x),
                                                        tp.value(x).size()});
                  });
}

Var mse_loss(Var predicted, const Tensor& actual) {
  Tape& t = *predicted.tape;
  const float loss = ops::mse_loss(t.value(predicted), actual);
  const std::size_t p = predicted.id;
  return t.record(Tensor::scalar(loss), "mse_loss", {p},
                  [p, actual](Tape& tp, std::size_t self) {
                    ops::mse_loss_backward(tp.value(p), actual, tp.grad(self)[0],
                                           tp.grad_buffer(p));
                  });
}

Var weighted_sum(Var input, const Tensor& weights) {
  Tape& t = *input.tape;
  const Tensor& x = t.value(input);
  if (x.size() != weights.size())
    throw DimensionError("weighted_sum: weight count does not match input");
  double sum = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i)
    sum += static_cast<double>(x[i]) * weights[i];
  const std::size_t id = input.id;
  return t.record(Tensor::scalar(static_cast<float>(sum)), "weighted_sum", {id},
                  [id, weights](Tape& tp, std::size_t self) {
                    const float g = tp.grad(self)[0];
                    float* gx = tp.grad_buffer(id);
                    for (std::size_t i = 0; i < weights.size(); ++i) gx[i] += g * weights[i];
                  });
}

}  // namespace bcnet::ag
