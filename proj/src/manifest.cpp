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

#include "bcnet/manifest.hpp"

#include <fstream>
#include <sstream>

#include "bcnet/error.hpp"

namespace bcnet {
namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
    s.remove_suffix(1);
  return s;
}

}  // namespace

void RunManifest::set(const std::string& key, std::string value) {
  if (key.empty() || key.find_first_of("=\n\r") != std::string::npos)
    throw UsageError("invalid manifest key '" + key + "'");
  if (value.find_first_of("\n\r") != std::string::npos)
    throw UsageError("manifest value for '" + key + "' contains a newline");
  entries_[key] = std::move(value);
}

std::optional<std::string> RunManifest::get(std::string_view key) const {
  auto it = entries_.find(key);
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

const std::string& RunManifest::at(std::string_view key) const {
  auto it = entries_.find(key);
  if (it == entries_.end()) throw UsageError("manifest has no '" + std::string(key) + "'");
  return it->second;
}

std::string RunManifest::to_string() const {
  std::string out;
  for (const auto& [k, v] : entries_) out += k + "=" + v + "\n";
  return out;
}

RunManifest RunManifest::parse(std::string_view text, std::string_view source) {
  RunManifest m;
  std::size_t line_no = 0;
  while (!text.empty()) {
    const std::size_t nl = text.find('\n');
    std::string_view line = trim(text.substr(0, nl));
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    if (line.empty() || line.front() == '#') continue;
    const std::size_t eq = line.find('=');
    const std::string where = std::string(source) + ":" + std::to_string(line_no);
    if (eq == std::string_view::npos) throw UsageError(where + ": expected key=value");
    const std::string key(trim(line.substr(0, eq)));
    if (key.empty()) throw UsageError(where + ": empty key");
    if (m.entries_.count(key)) throw UsageError(where + ": duplicate key '" + key + "'");
    m.entries_[key] = std::string(trim(line.substr(eq + 1)));
  }
  return m;
}

void RunManifest::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << to_string();
  if (!out) throw IoError("cannot write manifest " + path.string());
}

RunManifest RunManifest::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read manifest " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse(ss.str(), path.string());
}

}  // namespace bcnet
