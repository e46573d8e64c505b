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

#include "bcnet/toy_data.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "bcnet/error.hpp"
#include "bcnet/rng.hpp"

namespace bcnet {

RawFrame render_toy_frame(float angle_deg, std::uint64_t seed, std::size_t height,
                          std::size_t width) {
  Rng rng(seed);
  RawFrame f(height, width, std::vector<std::uint8_t>(height * width * 3));
  const std::size_t horizon = height * 2 / 5;
  const double bend = angle_deg / 90.0;
  const double sky_tint = rng.uniform(0.0f, 30.0f);
  const double ground_tint = rng.uniform(-15.0f, 15.0f);
  for (std::size_t y = 0; y < height; ++y) {
    // 0 at the horizon, 1 at the bottom row.
    const double depth = y < horizon ? 0.0 : double(y - horizon) / double(height - horizon);
    const double far = 1.0 - depth;
    const double centre = width / 2.0 + bend * width * 0.9 * far * far;
    const double half_road = width * (0.06 + 0.34 * depth);
    for (std::size_t x = 0; x < width; ++x) {
      std::uint8_t* px = f.pixel(y, x);
      double r, g, b;
      if (y < horizon) {
        r = 110 + sky_tint;
        g = 150 + sky_tint;
        b = 215;
      } else {
        const double off = std::abs(x + 0.5 - centre);
        if (off < half_road * 0.06) {
          r = g = b = 235;  // centre marking
        } else if (off < half_road) {
          r = g = b = 95 + ground_tint;
        } else {
          r = 70 + ground_tint;
          g = 125 + ground_tint;
          b = 60;
        }
      }
      const double noise = rng.uniform(-6.0f, 6.0f);
      px[0] = static_cast<std::uint8_t>(std::clamp(r + noise, 0.0, 255.0));
      px[1] = static_cast<std::uint8_t>(std::clamp(g + noise, 0.0, 255.0));
      px[2] = static_cast<std::uint8_t>(std::clamp(b + noise, 0.0, 255.0));
    }
  }
  return f;
}

ToyDataset make_toy_dataset(std::size_t count, std::uint64_t seed, float max_angle) {
  ToyDataset data;
  Rng rng(derive_seed(seed, {0x70e}));
  for (std::size_t i = 0; i < count; ++i) {
    const float angle = rng.uniform(-max_angle, max_angle);
    char name[32];
    std::snprintf(name, sizeof name, "frames/%05zu.png", i);
    data.samples.push_back({name, angle});
    data.frames.push_back(render_toy_frame(angle, derive_seed(seed, {i})));
  }
  return data;
}

MemoryFrameSource toy_frame_source(const ToyDataset& data, const PreprocessConfig& config) {
  MemoryFrameSource source;
  for (std::size_t i = 0; i < data.samples.size(); ++i)
    source.add(data.samples[i].image_path, preprocess(data.frames[i], config));
  return source;
}

void write_toy_dataset(const ToyDataset& data, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir / "frames");
  std::ofstream log(dir / "log.csv");
  if (!log) throw IoError("cannot write " + (dir / "log.csv").string());
  log << "image_path,steering_deg\n";
  char angle[32];
  for (std::size_t i = 0; i < data.samples.size(); ++i) {
    save_png(data.frames[i], dir / data.samples[i].image_path);
    std::snprintf(angle, sizeof angle, "%.9g", data.samples[i].steering_deg);
    log << data.samples[i].image_path << ',' << angle << '\n';
  }
}

}  // namespace bcnet
