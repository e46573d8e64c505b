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

#include <gtest/gtest.h>

#include <algorithm>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <set>

#include "bcnet/data.hpp"
#include "bcnet/error.hpp"
#include "bcnet/frames.hpp"
#include "bcnet/toy_data.hpp"

using namespace bcnet;
namespace fs = std::filesystem;

namespace {

std::vector<Sample> numbered(std::size_t n) {
  std::vector<Sample> s;
  for (std::size_t i = 0; i < n; ++i)
    s.push_back({"img" + std::to_string(i) + ".png", static_cast<float>(i) - 5.0f});
  return s;
}

}  // namespace

TEST(Log, ParsesCsv) {
  const auto log = parse_log("image_path,steering_deg\na.png,1.5\ndir/b c.jpg,-20\n",
                             LogFormat::csv, "mem");
  ASSERT_EQ(log.samples.size(), 2u);
  EXPECT_EQ(log.samples[1].image_path, "dir/b c.jpg");
  EXPECT_EQ(log.samples[1].steering_deg, -20.0f);
}

TEST(Log, ParsesSpaceSeparated) {
  const auto log = parse_log("0.jpg 0.000000,2018-07-01\n1.jpg -3.5\n", LogFormat::space_separated,
                             "mem");
  ASSERT_EQ(log.samples.size(), 2u);
  EXPECT_EQ(log.samples[1].steering_deg, -3.5f);
}

TEST(Log, SchemaErrorsNameTheLine) {
  const char* bad[] = {"path,angle\na.png,1\n", "image_path,steering_deg\na.png,abc\n",
                       "image_path,steering_deg\na.png,1\nb.png,95\n",
                       "image_path,steering_deg\n", "image_path,steering_deg\nnocomma\n"};
  for (const char* text : bad) EXPECT_THROW(parse_log(text, LogFormat::csv, "mem"), SchemaError)
      << text;
  try {
    parse_log("image_path,steering_deg\na.png,1\nb.png,nan\n", LogFormat::csv, "log.csv");
    FAIL();
  } catch (const SchemaError& e) {
    EXPECT_NE(std::string(e.what()).find("log.csv:3"), std::string::npos) << e.what();
  }
}

TEST(Split, ExactPartitionEightyTwenty) {
  for (std::size_t n : {1u, 5u, 10u, 64u, 101u}) {
    const auto all = numbered(n);
    for (bool seq : {false, true}) {
      const auto s = split_train_test(all, 0.8, 42, seq);
      EXPECT_EQ(s.train.size(), n * 8 / 10) << n;
      EXPECT_EQ(s.train.size() + s.test.size(), n);
      std::multiset<std::string> seen;
      for (const auto& x : s.train) seen.insert(x.image_path);
      for (const auto& x : s.test) seen.insert(x.image_path);
      std::multiset<std::string> want;
      for (const auto& x : all) want.insert(x.image_path);
      EXPECT_EQ(seen, want);
    }
  }
}

TEST(Split, SequentialHoldsOutTail) {
  const auto s = split_train_test(numbered(10), 0.8, 1, true);
  EXPECT_EQ(s.test[0].image_path, "img8.png");
  EXPECT_EQ(s.test[1].image_path, "img9.png");
}

TEST(Split, SeededAndDeterministic) {
  const auto a = split_train_test(numbered(30), 0.8, 7);
  const auto b = split_train_test(numbered(30), 0.8, 7);
  const auto c = split_train_test(numbered(30), 0.8, 8);
  EXPECT_EQ(a.test, b.test);
  EXPECT_NE(a.test, c.test);
}

TEST(Folds, ExactBalancedPartition) {
  for (std::size_t n : {4u, 7u, 51u, 64u}) {
    const FoldPlan plan(n, 4, 3);
    std::vector<int> hits(n, 0);
    std::size_t smallest = n, largest = 0;
    for (std::size_t f = 0; f < 4; ++f) {
      const auto m = plan.members(f);
      const auto c = plan.complement(f);
      EXPECT_EQ(m.size() + c.size(), n);
      for (auto i : m) ++hits[i];
      std::vector<std::size_t> merged(m);
      merged.insert(merged.end(), c.begin(), c.end());
      std::sort(merged.begin(), merged.end());
      for (std::size_t i = 0; i < n; ++i) ASSERT_EQ(merged[i], i);
      smallest = std::min(smallest, m.size());
      largest = std::max(largest, m.size());
    }
    for (int h : hits) EXPECT_EQ(h, 1);
    EXPECT_LE(largest - smallest, 1u);
  }
  EXPECT_THROW(FoldPlan(3, 4, 1), UsageError);
  EXPECT_THROW(FoldPlan(3, 0, 1), UsageError);
}

TEST(Batches, CoverPoolOncePerEpoch) {
  const auto b = batch_indices(10, 4, 1, 1);
  ASSERT_EQ(b.size(), 3u);
  EXPECT_EQ(b[2].size(), 2u);
  std::vector<std::size_t> all;
  for (const auto& x : b) all.insert(all.end(), x.begin(), x.end());
  std::sort(all.begin(), all.end());
  for (std::size_t i = 0; i < 10; ++i) EXPECT_EQ(all[i], i);
  EXPECT_EQ(batch_indices(10, 4, 1, 1), b);
  EXPECT_NE(batch_indices(10, 4, 1, 2), b);
  EXPECT_THROW(batch_indices(10, 0, 1, 1), UsageError);
}

TEST(Frames, ImageSourceAndDiskCache) {
  const fs::path dir = fs::temp_directory_path() / "bcnet_test_frames";
  fs::remove_all(dir);
  const ToyDataset toy = make_toy_dataset(3, 5);
  write_toy_dataset(toy, dir);
  const DrivingLog log = load_log(dir / "log.csv");
  ASSERT_EQ(log.samples.size(), 3u);
  EXPECT_EQ(log.samples, toy.samples);

  ImageFrameSource::Options opt;
  opt.disk_cache = dir / "cache";
  fs::create_directories(opt.disk_cache);
  const ImageFrameSource cached(dir, opt);
  const MemoryFrameSource mem = toy_frame_source(toy);
  for (const auto& s : log.samples)
    EXPECT_TRUE(cached.frame(s).tensor().bit_equal(mem.frame(s).tensor()));
  std::size_t files = 0;
  for ([[maybe_unused]] const auto& e : fs::directory_iterator(opt.disk_cache)) ++files;
  EXPECT_EQ(files, 3u);
  // A fresh source reads back from the disk cache bit-identically.
  const ImageFrameSource again(dir, opt);
  EXPECT_TRUE(again.frame(log.samples[1]).tensor().bit_equal(mem.frame(log.samples[1]).tensor()));

  EXPECT_THROW(cached.frame({"frames/missing.png", 0.0f}), IoError);
  fs::remove_all(dir);
}

TEST(Frames, AssembleBatchFlips) {
  const ToyDataset toy = make_toy_dataset(2, 9);
  const MemoryFrameSource mem = toy_frame_source(toy);
  const bool flips[] = {false, true};
  const Tensor batch = assemble_batch(mem, toy.samples, flips);
  ASSERT_EQ(batch.shape(), (Shape{2, 66, 200, 3}));
  const auto flipped = flip_augment(mem.frame(toy.samples[1]), 0.0f).first;
  EXPECT_EQ(0, std::memcmp(batch.ptr() + 66 * 200 * 3, flipped.tensor().ptr(),
                           66 * 200 * 3 * sizeof(float)));
}
