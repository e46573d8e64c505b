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

#include "bcnet/frames.hpp"

#include <bit>
#include <cstdio>

#include "bcnet/error.hpp"
#include "bcnet/model_zoo.hpp"
#include "bcnet/rng.hpp"
#include "bcnet/weights_io.hpp"

namespace bcnet {

ImageFrameSource::ImageFrameSource(std::filesystem::path image_root, Options options)
    : root_(std::move(image_root)), options_(std::move(options)) {
  if (!options_.disk_cache.empty()) std::filesystem::create_directories(options_.disk_cache);
}

std::filesystem::path ImageFrameSource::resolve(const std::string& image_path) const {
  const std::filesystem::path p(image_path);
  return p.is_absolute() || root_.empty() ? p : root_ / p;
}

std::string ImageFrameSource::cache_key(std::span<const std::uint8_t> bytes) const {
  std::uint64_t h = fnv1a64(std::string_view(reinterpret_cast<const char*>(bytes.data()),
                                             bytes.size()));
  h = splitmix64(h ^ std::bit_cast<std::uint64_t>(options_.preprocess.top_fraction));
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

PreprocessedFrame ImageFrameSource::frame(const Sample& sample) const {
  {
    std::lock_guard lock(mutex_);
    if (auto it = index_.find(sample.image_path); it != index_.end()) {
      lru_.splice(lru_.begin(), lru_, it->second);
      return it->second->second;
    }
  }
  const auto path = resolve(sample.image_path);
  const auto bytes = read_file(path);
  std::optional<PreprocessedFrame> result;
  std::filesystem::path cache_file;
  if (!options_.disk_cache.empty()) {
    cache_file = options_.disk_cache / (cache_key(bytes) + ".bcwt");
    if (std::filesystem::exists(cache_file)) {
      try {
        result.emplace(load(cache_file).at("frame"));
      } catch (const Error&) {
        result.reset();  // stale or damaged entry, rebuild below
      }
    }
  }
  if (!result) {
    result.emplace(preprocess(decode_image(bytes, path.string()), options_.preprocess));
    if (!cache_file.empty()) {
      WeightArchive entry;
      entry.insert("frame", result->tensor());
      save(entry, cache_file);
    }
  }
  if (options_.memory_frames > 0) {
    std::lock_guard lock(mutex_);
    if (!index_.count(sample.image_path)) {
      lru_.emplace_front(sample.image_path, *result);
      index_[sample.image_path] = lru_.begin();
      while (lru_.size() > options_.memory_frames) {
        index_.erase(lru_.back().first);
        lru_.pop_back();
      }
    }
  }
  return *std::move(result);
}

void MemoryFrameSource::add(const std::string& image_path, PreprocessedFrame frame) {
  frames_.insert_or_assign(image_path, std::move(frame));
}

PreprocessedFrame MemoryFrameSource::frame(const Sample& sample) const {
  auto it = frames_.find(sample.image_path);
  if (it == frames_.end()) throw IoError("no in-memory frame for " + sample.image_path);
  return it->second;
}

Tensor assemble_batch(const FrameSource& source, std::span<const Sample> samples,
                      std::span<const bool> flip) {
  if (samples.empty()) throw EmptyBatchError("cannot assemble an empty batch");
  constexpr std::size_t kFrameSize = kFrameHeight * kFrameWidth * kFrameChannels;
  std::vector<float> data(samples.size() * kFrameSize);
  for (std::size_t i = 0; i < samples.size(); ++i) {
    PreprocessedFrame f = source.frame(samples[i]);
    if (!flip.empty() && flip[i]) f = flip_augment(f, 0.0f).first;
    std::copy(f.tensor().data().begin(), f.tensor().data().end(),
              data.begin() + static_cast<std::ptrdiff_t>(i * kFrameSize));
  }
  return Tensor({samples.size(), kFrameHeight, kFrameWidth, kFrameChannels}, std::move(data));
}

}  // namespace bcnet
