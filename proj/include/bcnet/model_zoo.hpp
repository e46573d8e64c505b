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

// The four steering regressors and their exact parameter accounting.
//
//   nvidia            5 valid convs (24/36/48 @5x5 s2, 64/64 @3x3 s1),
//                     flatten 1152, dense 100-50-10-1
//   nvidia-pruned-32  same plus a 1x1 projection 64->32 before flatten
//   nvidia-pruned-16  same plus a 1x1 projection 64->16 before flatten
//   vgg16-tl          VGG16 conv blocks 1-5 (same padding, 2x2 pools),
//                     blocks 1-4 frozen, flatten 6144, dense 512-256-64-1
//
// ReLU follows every conv and hidden dense layer; the output is linear and
// predicts degrees.

#include <array>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "bcnet/autograd.hpp"
#include "bcnet/ops.hpp"
#include "bcnet/tensor.hpp"
#include "bcnet/weights_io.hpp"

namespace bcnet {

inline constexpr std::size_t kFrameHeight = 66;
inline constexpr std::size_t kFrameWidth = 200;
inline constexpr std::size_t kFrameChannels = 3;

enum class ModelKind { nvidia, nvidia_pruned_32, nvidia_pruned_16, vgg16_tl };

inline constexpr std::array<ModelKind, 4> kAllModelKinds = {
    ModelKind::nvidia, ModelKind::nvidia_pruned_32, ModelKind::nvidia_pruned_16,
    ModelKind::vgg16_tl};

// CLI strings: nvidia, nvidia-pruned-32, nvidia-pruned-16, vgg16-tl.
const char* kind_name(ModelKind kind) noexcept;
ModelKind parse_kind(std::string_view name);

enum class LayerKind { conv, conv1x1, maxpool, flatten, dense, relu };

struct LayerSpec {
  LayerKind kind;
  std::string name;
  std::size_t kernel_h = 0;
  std::size_t kernel_w = 0;
  std::size_t stride = 1;
  ops::Padding padding = ops::Padding::valid;
  std::size_t units = 0;  // output channels (conv) or width (dense)
  // Only weighted layers can be frozen; weightless layers stay true.
  bool trainable = true;

  bool has_weights() const noexcept {
    return kind == LayerKind::conv || kind == LayerKind::conv1x1 ||
           kind == LayerKind::dense;
  }
};

struct ModelSpec {
  ModelKind kind;
  Shape input_shape{kFrameHeight, kFrameWidth, kFrameChannels};
  std::vector<LayerSpec> layers;
};

struct WeightedLayer {
  std::size_t layer_index;
  std::string name;
  Shape kernel_shape;
  Shape bias_shape;
  bool trainable;

  std::string kernel_name() const { return name + ".kernel"; }
  std::string bias_name() const { return name + ".bias"; }
  std::size_t param_count() const { return numel(kernel_shape) + numel(bias_shape); }
};

ModelSpec build(ModelKind kind);

// Output shape (per frame, without batch axis) of every layer in order.
// Throws SpecError when a layer cannot consume its input.
std::vector<Shape> propagate_shapes(const ModelSpec& spec);

std::vector<WeightedLayer> weighted_layers(const ModelSpec& spec);

std::size_t count_params(const ModelSpec& spec, bool trainable_only);

// One entry per weighted layer, true when the layer is updated by training.
std::vector<bool> freeze_mask(const ModelSpec& spec);

// Index of the first layer with trainable weights; layers before it form a
// frozen prefix whose output never changes during training.
std::size_t first_trainable_layer(const ModelSpec& spec);

// He-style uniform init, limit sqrt(6 / fan_in), zero biases.
WeightArchive init_weights(const ModelSpec& spec, std::uint64_t seed);
WeightArchive zero_weights(const ModelSpec& spec);

// Copies every tensor of `pretrained` that names a layer of `spec` into
// `weights`; shapes must match. Returns the number of tensors copied.
std::size_t apply_pretrained(const ModelSpec& spec, WeightArchive& weights,
                             const WeightArchive& pretrained);

inline constexpr std::size_t kAllLayers = std::numeric_limits<std::size_t>::max();

// Tape-free forward over layers [begin, end). `input` carries a leading batch
// axis in the layout layer `begin` expects. Running to the end yields one
// prediction per frame (shape [N]).
Tensor forward_layers(const ModelSpec& spec, const WeightArchive& weights, Tensor input,
                      std::size_t begin = 0, std::size_t end = kAllLayers);

// Predicted angles in degrees, batch order preserved.
std::vector<float> forward(const ModelSpec& spec, const WeightArchive& weights,
                           std::span<const Tensor> frames);

// Records layers [begin, end) on `tape`. Parameters are bound by reference
// to `weights`; trainable ones are appended to `trainable_params` if given.
ag::Var forward_graph(ag::Tape& tape, const ModelSpec& spec, WeightArchive& weights,
                      ag::Var input, std::size_t begin = 0, std::size_t end = kAllLayers,
                      std::vector<Tensor*>* trainable_params = nullptr);

// Trainable tensors of `weights` in layer order (kernel, bias per layer).
std::vector<Tensor*> trainable_tensors(const ModelSpec& spec, WeightArchive& weights);

}  // namespace bcnet
