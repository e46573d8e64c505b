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

// Flat key=value record of everything needed to rerun a command.

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>

namespace bcnet {

class RunManifest {
 public:
  void set(const std::string& key, std::string value);
  std::optional<std::string> get(std::string_view key) const;
  // Throws UsageError when absent.
  const std::string& at(std::string_view key) const;
  bool contains(std::string_view key) const { return get(key).has_value(); }
  const std::map<std::string, std::string, std::less<>>& entries() const noexcept {
    return entries_;
  }

  // Sorted "key=value" lines; '#' comments and blank lines are skipped on
  // parse. Keys may not contain '=' or newlines, values may not contain
  // newlines.
  std::string to_string() const;
  static RunManifest parse(std::string_view text, std::string_view source = "<manifest>");
  void save(const std::filesystem::path& path) const;
  static RunManifest load(const std::filesystem::path& path);

 private:
  std::map<std::string, std::string, std::less<>> entries_;
};

}  // namespace bcnet
