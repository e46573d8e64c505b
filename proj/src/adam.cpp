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

#include "bcnet/adam.hpp"

#include <cmath>
#include <utility>

#include "bcnet/error.hpp"
#include "bcnet/kernels.hpp"

namespace bcnet {

AdamState::AdamState(AdamConfig cfg, std::span<Tensor* const> params) : config(cfg) {
  if (!(cfg.lr > 0 && cfg.beta1 > 0 && cfg.beta1 < 1 && cfg.beta2 > 0 &&
        cfg.beta2 < 1 && cfg.epsilon > 0))
    throw UsageError("Adam hyperparameters out of range");
  first_moment.reserve(params.size());
  second_moment.reserve(params.size());
  for (const Tensor* p : params) {
    first_moment.emplace_back(p->shape());
    second_moment.emplace_back(p->shape());
  }
}

void adam_step(std::span<Tensor* const> params,
               std::span<const std::span<const float>> grads, AdamState& state) {
  if (params.size() != grads.size() || params.size() != state.first_moment.size() ||
      params.size() != state.second_moment.size())
    throw DimensionError("adam_step: " + std::to_string(params.size()) + " params, " +
                         std::to_string(grads.size()) + " grads, " +
                         std::to_string(state.first_moment.size()) + " moment buffers");
  for (std::size_t i = 0; i < params.size(); ++i) {
    const Tensor& p = *params[i];
    if (grads[i].size() != p.size() || state.first_moment[i].shape() != p.shape() ||
        state.second_moment[i].shape() != p.shape())
      throw DimensionError("adam_step: shape mismatch for parameter " + std::to_string(i) +
                           " " + shape_string(p.shape()));
  }
  const std::uint64_t t = state.step + 1;
  const double td = static_cast<double>(t);
  const AdamConfig& c = state.config;
  const kernels::AdamCoefficients coeff{
      c.lr, c.beta1, c.beta2, c.epsilon,
      static_cast<float>(1.0 - std::pow(static_cast<double>(c.beta1), td)),
      static_cast<float>(1.0 - std::pow(static_cast<double>(c.beta2), td))};
  for (std::size_t i = 0; i < params.size(); ++i)
    kernels::adam_update(params[i]->data(), grads[i], state.first_moment[i].data(),
                         state.second_moment[i].data(), coeff);
  state.step = t;
}

void adam_step(std::span<Tensor* const> params, AdamState& state) {
  std::vector<std::vector<float>> zeros;
  std::vector<std::span<const float>> grads;
  grads.reserve(params.size());
  for (Tensor* p : params) {
    if (p->has_grad()) {
      grads.emplace_back(std::as_const(*p).grad());
    } else {
      zeros.emplace_back(p->size(), 0.0f);
      grads.emplace_back(zeros.back());
    }
  }
  adam_step(params, grads, state);
}

}  // namespace bcnet
