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

// BCWT: flat little-endian container of named float32 tensors.
//
//   magic "BCWT" | version u32 = 1 | count u32 |
//   count x ( name_len u16 | name bytes | rank u8 | dims u32 x rank |
//             product(dims) binary32 values, row-major )
//
// No padding, alignment, or compression. Entries keep insertion order, so a
// given archive always serializes to the same bytes.

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "bcnet/tensor.hpp"

namespace bcnet {

struct ModelSpec;

inline constexpr char kArchiveMagic[4] = {'B', 'C', 'W', 'T'};
inline constexpr std::uint32_t kArchiveVersion = 1;

class WeightArchive {
 public:
  using Entry = std::pair<std::string, Tensor>;

  // Throws UsageError on a duplicate, empty, or over-long name.
  void insert(std::string name, Tensor tensor);
  // Inserts or replaces, keeping the original position on replace.
  void set(std::string name, Tensor tensor);

  bool contains(std::string_view name) const { return find(name) != nullptr; }
  const Tensor* find(std::string_view name) const;
  Tensor* find(std::string_view name);
  // Throws ArchiveError naming the missing tensor.
  const Tensor& at(std::string_view name) const;
  Tensor& at(std::string_view name);

  std::size_t size() const noexcept { return entries_.size(); }
  bool empty() const noexcept { return entries_.empty(); }
  const std::vector<Entry>& entries() const noexcept { return entries_; }
  auto begin() const { return entries_.begin(); }
  auto end() const { return entries_.end(); }

  // Same names in the same order, bit-identical tensors.
  bool bit_equal(const WeightArchive& other) const;

 private:
  std::vector<Entry> entries_;
  std::unordered_map<std::string, std::size_t> index_;
};

std::vector<std::uint8_t> serialize(const WeightArchive& archive);
// `source` names the origin in error messages.
WeightArchive deserialize(std::span<const std::uint8_t> bytes,
                          std::string_view source = "<memory>");

// Writes atomically (temporary file + rename).
void save(const WeightArchive& archive, const std::filesystem::path& path);
WeightArchive load(const std::filesystem::path& path);

struct LayerMismatch {
  std::string layer;
  std::vector<std::string> problems;
};

// Every weighted layer of `spec` (optionally only those whose freeze-mask
// entry is false) checked for present, shape-matching kernel and bias.
// One entry per offending layer.
enum class LayerSelection { all, frozen_only, trainable_only };
std::vector<LayerMismatch> check_against(const WeightArchive& archive, const ModelSpec& spec,
                                         LayerSelection which = LayerSelection::all);
// Throws ArchiveError listing every mismatch at once.
void validate_against(const WeightArchive& archive, const ModelSpec& spec,
                      LayerSelection which = LayerSelection::all);

}  // namespace bcnet
