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

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string_view>
#include <vector>

namespace bcnet {

// 8-bit RGB, row-major, channel-interleaved.
struct RawFrame {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<std::uint8_t> rgb;

  RawFrame() = default;
  // Throws ImageError unless rgb.size() == height * width * 3.
  RawFrame(std::size_t h, std::size_t w, std::vector<std::uint8_t> pixels);

  std::uint8_t* pixel(std::size_t y, std::size_t x) { return &rgb[(y * width + x) * 3]; }
  const std::uint8_t* pixel(std::size_t y, std::size_t x) const {
    return &rgb[(y * width + x) * 3];
  }
};

// PNG, JPEG, or binary PPM (P6), detected from the leading bytes.
RawFrame decode_image(std::span<const std::uint8_t> bytes, std::string_view source);
RawFrame load_image(const std::filesystem::path& path);
std::vector<std::uint8_t> read_file(const std::filesystem::path& path);

void save_png(const RawFrame& frame, const std::filesystem::path& path);

}  // namespace bcnet
