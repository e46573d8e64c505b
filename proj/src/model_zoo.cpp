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

#include "bcnet/model_zoo.hpp"

#include <cmath>

#include "bcnet/error.hpp"
#include "bcnet/rng.hpp"

namespace bcnet {

const char* kind_name(ModelKind kind) noexcept {
  switch (kind) {
    case ModelKind::nvidia:
      return "nvidia";
    case ModelKind::nvidia_pruned_32:
      return "nvidia-pruned-32";
    case ModelKind::nvidia_pruned_16:
      return "nvidia-pruned-16";
    case ModelKind::vgg16_tl:
      return "vgg16-tl";
  }
  return "unknown";
}

ModelKind parse_kind(std::string_view name) {
  for (ModelKind k : kAllModelKinds)
    if (name == kind_name(k)) return k;
  throw UsageError("unknown model kind '" + std::string(name) +
                   "' (expected nvidia, nvidia-pruned-32, nvidia-pruned-16, vgg16-tl)");
}

namespace {

LayerSpec conv(std::string name, std::size_t k, std::size_t stride, std::size_t filters,
               ops::Padding padding, bool trainable = true) {
  LayerSpec l{LayerKind::conv, std::move(name)};
  l.kernel_h = l.kernel_w = k;
  l.stride = stride;
  l.units = filters;
  l.padding = padding;
  l.trainable = trainable;
  return l;
}

LayerSpec projection(std::string name, std::size_t filters) {
  LayerSpec l{LayerKind::conv1x1, std::move(name)};
  l.kernel_h = l.kernel_w = 1;
  l.units = filters;
  return l;
}

LayerSpec dense(std::string name, std::size_t units) {
  LayerSpec l{LayerKind::dense, std::move(name)};
  l.units = units;
  return l;
}

LayerSpec simple(LayerKind kind, std::string name) {
  return LayerSpec{kind, std::move(name)};
}

void add_relu(std::vector<LayerSpec>& layers) {
  layers.push_back(simple(LayerKind::relu, layers.back().name + ".relu"));
}

void add_head(std::vector<LayerSpec>& layers, std::string_view prefix,
              std::initializer_list<std::size_t> hidden) {
  int i = 1;
  for (auto units : hidden) {
    layers.push_back(dense(std::string(prefix) + "dense" + std::to_string(i++), units));
    add_relu(layers);
  }
  layers.push_back(dense(std::string(prefix) + "dense" + std::to_string(i), 1));
}

ModelSpec build_nvidia(ModelKind kind, std::size_t projection_filters) {
  ModelSpec spec;
  spec.kind = kind;
  auto& L = spec.layers;
  const auto valid = ops::Padding::valid;
  L.push_back(conv("conv1", 5, 2, 24, valid));
  add_relu(L);
  L.push_back(conv("conv2", 5, 2, 36, valid));
  add_relu(L);
  L.push_back(conv("conv3", 5, 2, 48, valid));
  add_relu(L);
  L.push_back(conv("conv4", 3, 1, 64, valid));
  add_relu(L);
  L.push_back(conv("conv5", 3, 1, 64, valid));
  add_relu(L);
  if (projection_filters) {
    L.push_back(projection("conv1x1", projection_filters));
    add_relu(L);
  }
  L.push_back(simple(LayerKind::flatten, "flatten"));
  add_head(L, "", {100, 50, 10});
  return spec;
}

ModelSpec build_vgg16_tl() {
  ModelSpec spec;
  spec.kind = ModelKind::vgg16_tl;
  auto& L = spec.layers;
  constexpr std::size_t kConvs[5] = {2, 2, 3, 3, 3};
  constexpr std::size_t kFilters[5] = {64, 128, 256, 512, 512};
  for (std::size_t b = 0; b < 5; ++b) {
    const std::string block = "block" + std::to_string(b + 1);
    const bool trainable = b == 4;
    for (std::size_t c = 0; c < kConvs[b]; ++c) {
      L.push_back(conv(block + ".conv" + std::to_string(c + 1), 3, 1, kFilters[b],
                       ops::Padding::same, trainable));
      add_relu(L);
    }
    L.push_back(simple(LayerKind::maxpool, block + ".pool"));
  }
  L.push_back(simple(LayerKind::flatten, "flatten"));
  add_head(L, "head.", {512, 256, 64});
  return spec;
}

struct LayerShapes {
  Shape out;
  Shape kernel;
  Shape bias;
};

LayerShapes layer_shapes(const LayerSpec& l, const Shape& in) {
  auto need_spatial = [&] {
    if (in.size() != 3)
      throw SpecError(l.name + ": expects an HWC input, got " + shape_string(in));
  };
  switch (l.kind) {
    case LayerKind::conv:
    case LayerKind::conv1x1: {
      need_spatial();
      try {
        const auto g = ops::conv_geometry(in[0], in[1], in[2], l.kernel_h, l.kernel_w,
                                          l.units, l.stride, l.padding);
        return {{g.out_h, g.out_w, g.cout}, {l.kernel_h, l.kernel_w, in[2], l.units}, {l.units}};
      } catch (const DimensionError& e) {
        throw SpecError(l.name + ": " + e.what());
      }
    }
    case LayerKind::maxpool:
      need_spatial();
      if (in[0] < 2 || in[1] < 2)
        throw SpecError(l.name + ": input " + shape_string(in) + " smaller than 2x2");
      return {{in[0] / 2, in[1] / 2, in[2]}, {}, {}};
    case LayerKind::flatten:
      return {{numel(in)}, {}, {}};
    case LayerKind::dense:
      if (in.size() != 1)
        throw SpecError(l.name + ": dense layer needs a flat input, got " + shape_string(in));
      return {{l.units}, {in[0], l.units}, {l.units}};
    case LayerKind::relu:
      return {in, {}, {}};
  }
  throw SpecError("unknown layer kind");
}

}  // namespace

ModelSpec build(ModelKind kind) {
  switch (kind) {
    case ModelKind::nvidia:
      return build_nvidia(kind, 0);
    case ModelKind::nvidia_pruned_32:
      return build_nvidia(kind, 32);
    case ModelKind::nvidia_pruned_16:
      return build_nvidia(kind, 16);
    case ModelKind::vgg16_tl:
      return build_vgg16_tl();
  }
  throw UsageError("unknown model kind");
}

std::vector<Shape> propagate_shapes(const ModelSpec& spec) {
  std::vector<Shape> shapes;
  shapes.reserve(spec.layers.size());
  Shape cur = spec.input_shape;
  for (const auto& l : spec.layers) {
    cur = layer_shapes(l, cur).out;
    shapes.push_back(cur);
  }
  if (cur != Shape{1})
    throw SpecError(std::string(kind_name(spec.kind)) +
                    ": network must end in a single scalar, ends in " + shape_string(cur));
  return shapes;
}

std::vector<WeightedLayer> weighted_layers(const ModelSpec& spec) {
  std::vector<WeightedLayer> out;
  Shape cur = spec.input_shape;
  for (std::size_t i = 0; i < spec.layers.size(); ++i) {
    const auto& l = spec.layers[i];
    auto s = layer_shapes(l, cur);
    if (l.has_weights()) out.push_back({i, l.name, s.kernel, s.bias, l.trainable});
    cur = std::move(s.out);
  }
  return out;
}

std::size_t count_params(const ModelSpec& spec, bool trainable_only) {
  propagate_shapes(spec);
  std::size_t total = 0;
  for (const auto& w : weighted_layers(spec))
    if (!trainable_only || w.trainable) total += w.param_count();
  return total;
}

std::vector<bool> freeze_mask(const ModelSpec& spec) {
  std::vector<bool> mask;
  for (const auto& l : spec.layers)
    if (l.has_weights()) mask.push_back(l.trainable);
  return mask;
}

std::size_t first_trainable_layer(const ModelSpec& spec) {
  for (std::size_t i = 0; i < spec.layers.size(); ++i)
    if (spec.layers[i].has_weights() && spec.layers[i].trainable) return i;
  return spec.layers.size();
}

WeightArchive init_weights(const ModelSpec& spec, std::uint64_t seed) {
  WeightArchive archive;
  for (const auto& w : weighted_layers(spec)) {
    Rng rng(derive_seed(seed, {w.layer_index}));
    const std::size_t fan_in = numel(w.kernel_shape) / w.kernel_shape.back();
    const float limit = static_cast<float>(std::sqrt(6.0 / static_cast<double>(fan_in)));
    Tensor kernel(w.kernel_shape);
    for (float& v : kernel.data()) v = rng.uniform(-limit, limit);
    archive.insert(w.kernel_name(), std::move(kernel));
    archive.insert(w.bias_name(), Tensor(w.bias_shape));
  }
  return archive;
}

WeightArchive zero_weights(const ModelSpec& spec) {
  WeightArchive archive;
  for (const auto& w : weighted_layers(spec)) {
    archive.insert(w.kernel_name(), Tensor(w.kernel_shape));
    archive.insert(w.bias_name(), Tensor(w.bias_shape));
  }
  return archive;
}

std::size_t apply_pretrained(const ModelSpec& spec, WeightArchive& weights,
                             const WeightArchive& pretrained) {
  std::size_t copied = 0;
  for (const auto& w : weighted_layers(spec)) {
    const std::pair<std::string, const Shape*> names[] = {
        {w.kernel_name(), &w.kernel_shape}, {w.bias_name(), &w.bias_shape}};
    for (const auto& [name, shape] : names) {
      const Tensor* src = pretrained.find(name);
      if (!src) continue;
      if (src->shape() != *shape)
        throw ArchiveError("pretrained tensor " + name + " has shape " +
                           shape_string(src->shape()) + ", expected " + shape_string(*shape));
      weights.set(name, *src);
      ++copied;
    }
  }
  return copied;
}

Tensor forward_layers(const ModelSpec& spec, const WeightArchive& weights, Tensor x,
                      std::size_t begin, std::size_t end) {
  end = std::min(end, spec.layers.size());
  if (x.rank() < 2)
    throw DimensionError("forward_layers: input needs a leading batch axis, got " +
                         shape_string(x.shape()));
  const std::size_t n = x.dim(0);
  for (std::size_t i = begin; i < end; ++i) {
    const auto& l = spec.layers[i];
    switch (l.kind) {
      case LayerKind::conv:
        x = ops::conv2d(x, weights.at(l.name + ".kernel"), weights.at(l.name + ".bias"),
                        l.stride, l.padding);
        break;
      case LayerKind::conv1x1:
        x = ops::conv1x1(x, weights.at(l.name + ".kernel"), weights.at(l.name + ".bias"));
        break;
      case LayerKind::maxpool:
        x = ops::maxpool2d(x);
        break;
      case LayerKind::flatten:
        x = ops::flatten(x);
        break;
      case LayerKind::dense:
        x = ops::dense(x, weights.at(l.name + ".kernel"), weights.at(l.name + ".bias"));
        break;
      case LayerKind::relu:
        x = ops::relu(x);
        break;
    }
  }
  if (end == spec.layers.size()) {
    if (x.size() != n)
      throw SpecError("network output " + shape_string(x.shape()) +
                      " is not one scalar per frame");
    x = x.reshaped({n});
  }
  return x;
}

std::vector<float> forward(const ModelSpec& spec, const WeightArchive& weights,
                           std::span<const Tensor> frames) {
  if (frames.empty()) return {};
  validate_against(weights, spec);
  const std::size_t frame_size = numel(spec.input_shape);
  std::vector<float> batch;
  batch.reserve(frames.size() * frame_size);
  for (const auto& f : frames) {
    if (f.shape() != spec.input_shape)
      throw DimensionError("frame shape " + shape_string(f.shape()) + " does not match " +
                           shape_string(spec.input_shape));
    batch.insert(batch.end(), f.data().begin(), f.data().end());
  }
  Shape shape{frames.size()};
  shape.insert(shape.end(), spec.input_shape.begin(), spec.input_shape.end());
  Tensor out = forward_layers(spec, weights, Tensor(std::move(shape), std::move(batch)));
  return out.release();
}

ag::Var forward_graph(ag::Tape& tape, const ModelSpec& spec, WeightArchive& weights,
                      ag::Var x, std::size_t begin, std::size_t end,
                      std::vector<Tensor*>* trainable_params) {
  end = std::min(end, spec.layers.size());
  auto bind = [&](const LayerSpec& l, const char* suffix) {
    Tensor& t = weights.at(l.name + suffix);
    if (l.trainable && trainable_params) trainable_params->push_back(&t);
    return tape.parameter(t, l.trainable);
  };
  for (std::size_t i = begin; i < end; ++i) {
    const auto& l = spec.layers[i];
    switch (l.kind) {
      case LayerKind::conv: {
        auto k = bind(l, ".kernel");
        auto b = bind(l, ".bias");
        x = ag::conv2d(x, k, b, l.stride, l.padding);
        break;
      }
      case LayerKind::conv1x1: {
        auto k = bind(l, ".kernel");
        auto b = bind(l, ".bias");
        x = ag::conv1x1(x, k, b);
        break;
      }
      case LayerKind::maxpool:
        x = ag::maxpool2d(x);
        break;
      case LayerKind::flatten:
        x = ag::flatten(x);
        break;
      case LayerKind::dense: {
        auto w = bind(l, ".kernel");
        auto b = bind(l, ".bias");
        x = ag::dense(x, w, b);
        break;
      }
      case LayerKind::relu:
        x = ag::relu(x);
        break;
    }
  }
  return x;
}

std::vector<Tensor*> trainable_tensors(const ModelSpec& spec, WeightArchive& weights) {
  std::vector<Tensor*> out;
  for (const auto& w : weighted_layers(spec))
    if (w.trainable) {
      out.push_back(&weights.at(w.kernel_name()));
      out.push_back(&weights.at(w.bias_name()));
    }
  return out;
}

}  // namespace bcnet
