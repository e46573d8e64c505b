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

// Driving-log ingestion and the deterministic partitions used for training:
// an 80/20 train/test split, a k-fold plan over the training pool, and
// per-epoch shuffled mini-batches.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace bcnet {

inline constexpr float kMaxSteeringDeg = 90.0f;

struct Sample {
  std::string image_path;
  float steering_deg = 0.0f;

  friend bool operator==(const Sample&, const Sample&) = default;
};

struct DrivingLog {
  std::vector<Sample> samples;
  std::filesystem::path source;
};

// csv: header "image_path,steering_deg", one sample per line.
// space_separated: "<image> <angle>[,<anything>]" per line, no header.
enum class LogFormat { csv, space_separated };

DrivingLog parse_log(std::string_view text, LogFormat format, std::string_view source);
// IoError when unreadable; SchemaError naming the line for a bad row, an
// angle outside [-90, 90], or an empty log.
DrivingLog load_log(const std::filesystem::path& path, LogFormat format = LogFormat::csv);

struct TrainTestSplit {
  std::vector<Sample> train;
  std::vector<Sample> test;
};

// Seeded shuffle (or original order when `sequential`) then a cut at
// floor(fraction * n).
TrainTestSplit split_train_test(const std::vector<Sample>& samples, double fraction,
                                std::uint64_t seed, bool sequential = false);

class FoldPlan {
 public:
  // Seeded balanced partition of pool indices [0, pool_size) into k folds;
  // sizes differ by at most one. UsageError when pool_size < k or k == 0.
  FoldPlan(std::size_t pool_size, std::size_t k, std::uint64_t seed);

  std::size_t k() const noexcept { return k_; }
  std::size_t pool_size() const noexcept { return fold_of_.size(); }
  std::size_t fold_of(std::size_t index) const { return fold_of_.at(index); }
  // Pool indices assigned to `fold`, ascending.
  std::vector<std::size_t> members(std::size_t fold) const;
  // Pool indices not in `fold`, ascending.
  std::vector<std::size_t> complement(std::size_t fold) const;

 private:
  std::size_t k_;
  std::vector<std::size_t> fold_of_;
};

std::vector<Sample> gather(const std::vector<Sample>& pool,
                           const std::vector<std::size_t>& indices);

// Batches of pool indices for one epoch: a permutation keyed by
// (seed, epoch), cut into batch_size chunks with the short tail kept.
std::vector<std::vector<std::size_t>> batch_indices(std::size_t pool_size,
                                                    std::size_t batch_size,
                                                    std::uint64_t seed, std::uint64_t epoch);
std::vector<std::vector<Sample>> batch_iter(const std::vector<Sample>& pool,
                                            std::size_t batch_size, std::uint64_t seed,
                                            std::uint64_t epoch);

}  // namespace bcnet
