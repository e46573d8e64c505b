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

// Where training gets its network inputs from: decoded and preprocessed
// image files (with optional memory and on-disk caches) or frames already in
// memory.

#include <cstddef>
#include <filesystem>
#include <list>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>

#include "bcnet/data.hpp"
#include "bcnet/preprocess.hpp"

namespace bcnet {

class FrameSource {
 public:
  virtual ~FrameSource() = default;
  virtual PreprocessedFrame frame(const Sample& sample) const = 0;
};

class ImageFrameSource final : public FrameSource {
 public:
  struct Options {
    PreprocessConfig preprocess;
    // Directory of BCWT files named by content hash; empty disables.
    std::filesystem::path disk_cache;
    // Frames kept decoded in memory (least recently used evicted).
    std::size_t memory_frames = 2048;
  };

  ImageFrameSource(std::filesystem::path image_root, Options options);

  PreprocessedFrame frame(const Sample& sample) const override;

  // Cache file stem for an image's bytes under the current options.
  std::string cache_key(std::span<const std::uint8_t> image_bytes) const;

 private:
  std::filesystem::path resolve(const std::string& image_path) const;

  std::filesystem::path root_;
  Options options_;
  mutable std::mutex mutex_;
  mutable std::list<std::pair<std::string, PreprocessedFrame>> lru_;
  mutable std::unordered_map<std::string, decltype(lru_)::iterator> index_;
};

class MemoryFrameSource final : public FrameSource {
 public:
  void add(const std::string& image_path, PreprocessedFrame frame);
  PreprocessedFrame frame(const Sample& sample) const override;
  std::size_t size() const noexcept { return frames_.size(); }

 private:
  std::unordered_map<std::string, PreprocessedFrame> frames_;
};

// N x 66 x 200 x 3 batch; frames with flip[i] set are mirrored.
Tensor assemble_batch(const FrameSource& source, std::span<const Sample> samples,
                      std::span<const bool> flip = {});

}  // namespace bcnet
