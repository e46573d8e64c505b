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

// Synthetic road frames whose steering angle is recoverable from the image:
// the road centre line bends toward the angle's side. Used for desk-scale
// runs, tests and demos where the real driving dataset is not at hand.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "bcnet/data.hpp"
#include "bcnet/frames.hpp"
#include "bcnet/image.hpp"

namespace bcnet {

struct ToyDataset {
  std::vector<Sample> samples;  // image paths "frames/NNNNN.png"
  std::vector<RawFrame> frames;
};

RawFrame render_toy_frame(float angle_deg, std::uint64_t seed, std::size_t height = 132,
                          std::size_t width = 320);

// Angles uniform in [-max_angle, max_angle].
ToyDataset make_toy_dataset(std::size_t count, std::uint64_t seed, float max_angle = 25.0f);

// Preprocessed frames of `data` keyed by image path.
MemoryFrameSource toy_frame_source(const ToyDataset& data, const PreprocessConfig& config = {});

// Writes <dir>/frames/*.png and <dir>/log.csv.
void write_toy_dataset(const ToyDataset& data, const std::filesystem::path& dir);

}  // namespace bcnet
