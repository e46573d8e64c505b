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

#include "bcnet/data.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "bcnet/error.hpp"
#include "bcnet/rng.hpp"

namespace bcnet {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

Sample make_sample(std::string_view path, std::string_view angle, std::string_view source,
                   std::size_t line) {
  const std::string where = std::string(source) + ":" + std::to_string(line);
  path = trim(path);
  angle = trim(angle);
  if (path.empty()) throw SchemaError(where + ": empty image path");
  float value = 0.0f;
  const auto [end, ec] = std::from_chars(angle.data(), angle.data() + angle.size(), value);
  if (ec != std::errc() || end != angle.data() + angle.size() || !std::isfinite(value))
    throw SchemaError(where + ": steering angle '" + std::string(angle) + "' is not a number");
  if (value < -kMaxSteeringDeg || value > kMaxSteeringDeg)
    throw SchemaError(where + ": steering angle " + std::string(angle) +
                      " outside [-90, 90] degrees");
  return {std::string(path), value};
}

}  // namespace

DrivingLog parse_log(std::string_view text, LogFormat format, std::string_view source) {
  DrivingLog log;
  log.source = std::string(source);
  std::size_t line_no = 0;
  bool header_seen = format != LogFormat::csv;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    auto nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    const std::string_view line = trim(text.substr(pos, nl - pos));
    pos = nl + 1;
    ++line_no;
    if (line.empty()) continue;
    if (!header_seen) {
      if (line != "image_path,steering_deg")
        throw SchemaError(std::string(source) + ":" + std::to_string(line_no) +
                          ": expected header 'image_path,steering_deg'");
      header_seen = true;
      continue;
    }
    if (format == LogFormat::csv) {
      const auto comma = line.rfind(',');
      if (comma == std::string_view::npos)
        throw SchemaError(std::string(source) + ":" + std::to_string(line_no) +
                          ": expected 'image_path,steering_deg'");
      log.samples.push_back(
          make_sample(line.substr(0, comma), line.substr(comma + 1), source, line_no));
    } else {
      const auto space = line.find_first_of(" \t");
      if (space == std::string_view::npos)
        throw SchemaError(std::string(source) + ":" + std::to_string(line_no) +
                          ": expected '<image> <angle>'");
      std::string_view angle = trim(line.substr(space + 1));
      angle = angle.substr(0, angle.find(','));
      log.samples.push_back(make_sample(line.substr(0, space), angle, source, line_no));
    }
  }
  if (log.samples.empty()) throw SchemaError(std::string(source) + ": log has no samples");
  return log;
}

DrivingLog load_log(const std::filesystem::path& path, LogFormat format) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open driving log " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  DrivingLog log = parse_log(text.str(), format, path.string());
  log.source = path;
  return log;
}

TrainTestSplit split_train_test(const std::vector<Sample>& samples, double fraction,
                                std::uint64_t seed, bool sequential) {
  if (!(fraction > 0.0 && fraction < 1.0))
    throw UsageError("train fraction must lie in (0, 1)");
  std::vector<std::size_t> order(samples.size());
  std::iota(order.begin(), order.end(), 0);
  if (!sequential) {
    Rng rng(derive_seed(seed, {0x5bd1e995}));
    rng.shuffle(std::span(order));
  }
  const auto cut = static_cast<std::size_t>(
      std::floor(fraction * static_cast<double>(samples.size()) + 1e-9));
  TrainTestSplit split;
  split.train.reserve(cut);
  split.test.reserve(samples.size() - cut);
  for (std::size_t i = 0; i < order.size(); ++i)
    (i < cut ? split.train : split.test).push_back(samples[order[i]]);
  return split;
}

FoldPlan::FoldPlan(std::size_t pool_size, std::size_t k, std::uint64_t seed) : k_(k) {
  if (k == 0) throw UsageError("fold count must be positive");
  if (pool_size < k)
    throw UsageError("cannot make " + std::to_string(k) + " folds from " +
                     std::to_string(pool_size) + " samples");
  std::vector<std::size_t> order(pool_size);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(derive_seed(seed, {0xf01d}));
  rng.shuffle(std::span(order));
  fold_of_.resize(pool_size);
  for (std::size_t pos = 0; pos < pool_size; ++pos) fold_of_[order[pos]] = pos % k;
}

std::vector<std::size_t> FoldPlan::members(std::size_t fold) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < fold_of_.size(); ++i)
    if (fold_of_[i] == fold) out.push_back(i);
  return out;
}

std::vector<std::size_t> FoldPlan::complement(std::size_t fold) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < fold_of_.size(); ++i)
    if (fold_of_[i] != fold) out.push_back(i);
  return out;
}

std::vector<Sample> gather(const std::vector<Sample>& pool,
                           const std::vector<std::size_t>& indices) {
  std::vector<Sample> out;
  out.reserve(indices.size());
  for (auto i : indices) out.push_back(pool.at(i));
  return out;
}

std::vector<std::vector<std::size_t>> batch_indices(std::size_t pool_size,
                                                    std::size_t batch_size,
                                                    std::uint64_t seed, std::uint64_t epoch) {
  if (batch_size == 0) throw UsageError("batch size must be positive");
  std::vector<std::size_t> order(pool_size);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(derive_seed(seed, {0xba7c4, epoch}));
  rng.shuffle(std::span(order));
  std::vector<std::vector<std::size_t>> batches;
  for (std::size_t i = 0; i < pool_size; i += batch_size)
    batches.emplace_back(order.begin() + i,
                         order.begin() + std::min(pool_size, i + batch_size));
  return batches;
}

std::vector<std::vector<Sample>> batch_iter(const std::vector<Sample>& pool,
                                            std::size_t batch_size, std::uint64_t seed,
                                            std::uint64_t epoch) {
  std::vector<std::vector<Sample>> out;
  for (const auto& b : batch_indices(pool.size(), batch_size, seed, epoch))
    out.push_back(gather(pool, b));
  return out;
}

}  // namespace bcnet
