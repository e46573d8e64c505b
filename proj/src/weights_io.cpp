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

#include "bcnet/weights_io.hpp"

#include <atomic>
#include <bit>
#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>
#include <thread>

#include "bcnet/error.hpp"
#include "bcnet/model_zoo.hpp"

namespace bcnet {

void WeightArchive::insert(std::string name, Tensor tensor) {
  if (name.empty()) throw UsageError("tensor name must not be empty");
  if (name.size() > std::numeric_limits<std::uint16_t>::max())
    throw UsageError("tensor name longer than 65535 bytes");
  if (tensor.rank() > std::numeric_limits<std::uint8_t>::max())
    throw UsageError("tensor rank above 255: " + name);
  if (index_.count(name)) throw UsageError("duplicate tensor name: " + name);
  index_.emplace(name, entries_.size());
  entries_.emplace_back(std::move(name), std::move(tensor));
}

void WeightArchive::set(std::string name, Tensor tensor) {
  if (auto it = index_.find(name); it != index_.end()) {
    entries_[it->second].second = std::move(tensor);
    return;
  }
  insert(std::move(name), std::move(tensor));
}

const Tensor* WeightArchive::find(std::string_view name) const {
  auto it = index_.find(std::string(name));
  return it == index_.end() ? nullptr : &entries_[it->second].second;
}

Tensor* WeightArchive::find(std::string_view name) {
  auto it = index_.find(std::string(name));
  return it == index_.end() ? nullptr : &entries_[it->second].second;
}

const Tensor& WeightArchive::at(std::string_view name) const {
  if (const Tensor* t = find(name)) return *t;
  throw ArchiveError("archive has no tensor named '" + std::string(name) + "'");
}

Tensor& WeightArchive::at(std::string_view name) {
  if (Tensor* t = find(name)) return *t;
  throw ArchiveError("archive has no tensor named '" + std::string(name) + "'");
}

bool WeightArchive::bit_equal(const WeightArchive& other) const {
  if (entries_.size() != other.entries_.size()) return false;
  for (std::size_t i = 0; i < entries_.size(); ++i)
    if (entries_[i].first != other.entries_[i].first ||
        !entries_[i].second.bit_equal(other.entries_[i].second))
      return false;
  return true;
}

namespace {

class Writer {
 public:
  void bytes(const void* p, std::size_t n) {
    const auto* b = static_cast<const std::uint8_t*>(p);
    out_.insert(out_.end(), b, b + n);
  }
  void u8(std::uint8_t v) { out_.push_back(v); }
  void u16(std::uint16_t v) {
    for (int i = 0; i < 2; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }
  void reserve(std::size_t n) { out_.reserve(n); }
  std::vector<std::uint8_t> take() { return std::move(out_); }

 private:
  std::vector<std::uint8_t> out_;
};

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> in) : in_(in) {}
  std::size_t remaining() const { return in_.size() - pos_; }
  bool has(std::size_t n) const { return remaining() >= n; }
  std::uint8_t u8() { return in_[pos_++]; }
  std::uint16_t u16() {
    std::uint16_t v = static_cast<std::uint16_t>(in_[pos_] | (in_[pos_ + 1] << 8));
    pos_ += 2;
    return v;
  }
  std::uint32_t u32() {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(in_[pos_ + i]) << (8 * i);
    pos_ += 4;
    return v;
  }
  float f32() { return std::bit_cast<float>(u32()); }
  std::string str(std::size_t n) {
    std::string s(reinterpret_cast<const char*>(in_.data() + pos_), n);
    pos_ += n;
    return s;
  }

 private:
  std::span<const std::uint8_t> in_;
  std::size_t pos_ = 0;
};

// Smallest possible entry: u16 name length, 1-byte name, rank 0, one float.
constexpr std::size_t kMinEntryBytes = 2 + 1 + 1 + 4;

}  // namespace

std::vector<std::uint8_t> serialize(const WeightArchive& archive) {
  Writer w;
  std::size_t total = 12;
  for (const auto& [name, t] : archive)
    total += 2 + name.size() + 1 + 4 * t.rank() + 4 * t.size();
  w.reserve(total);
  w.bytes(kArchiveMagic, 4);
  w.u32(kArchiveVersion);
  w.u32(static_cast<std::uint32_t>(archive.size()));
  for (const auto& [name, t] : archive) {
    w.u16(static_cast<std::uint16_t>(name.size()));
    w.bytes(name.data(), name.size());
    w.u8(static_cast<std::uint8_t>(t.rank()));
    for (auto d : t.shape()) w.u32(static_cast<std::uint32_t>(d));
    for (float v : t.data()) w.f32(v);
  }
  return w.take();
}

WeightArchive deserialize(std::span<const std::uint8_t> bytes, std::string_view source) {
  const std::string src(source);
  Reader r(bytes);
  if (!r.has(12) || std::memcmp(bytes.data(), kArchiveMagic, 4) != 0)
    throw FormatError(src + ": not a BCWT archive (bad magic)");
  r.str(4);
  const std::uint32_t version = r.u32();
  if (version != kArchiveVersion)
    throw FormatError(src + ": unsupported BCWT version " + std::to_string(version));
  const std::uint32_t count = r.u32();
  if (count > r.remaining() / kMinEntryBytes)
    throw CorruptionError(src + ": declared tensor count " + std::to_string(count) +
                          " exceeds what " + std::to_string(r.remaining()) +
                          " payload bytes can hold");
  WeightArchive archive;
  for (std::uint32_t i = 0; i < count; ++i) {
    const std::string where = src + ": tensor #" + std::to_string(i);
    if (!r.has(2)) throw CorruptionError(where + " truncated before its name");
    const std::uint16_t name_len = r.u16();
    if (name_len == 0) throw CorruptionError(where + " has an empty name");
    if (!r.has(name_len + 1u)) throw CorruptionError(where + " truncated inside its name");
    std::string name = r.str(name_len);
    const std::string named = src + ": tensor '" + name + "'";
    const std::uint8_t rank = r.u8();
    if (!r.has(4u * rank)) throw CorruptionError(named + " truncated inside its dims");
    Shape shape(rank);
    std::uint64_t elems = 1;
    for (auto& d : shape) {
      d = r.u32();
      if (d == 0) throw CorruptionError(named + " has a zero dimension");
      elems *= d;
      if (elems > r.remaining() / 4)
        throw CorruptionError(named + " is truncated: payload shorter than " +
                              shape_string(shape) + " declares");
    }
    if (!r.has(4 * elems))
      throw CorruptionError(named + " is truncated: payload shorter than " +
                            shape_string(shape) + " declares");
    std::vector<float> data(static_cast<std::size_t>(elems));
    for (auto& v : data) v = r.f32();
    if (archive.contains(name)) throw FormatError(named + " appears twice");
    try {
      archive.insert(std::move(name), Tensor(std::move(shape), std::move(data)));
    } catch (const NumericError&) {
      throw CorruptionError(named + " holds non-finite values");
    }
  }
  if (r.remaining() != 0)
    throw CorruptionError(src + ": " + std::to_string(r.remaining()) +
                          " trailing bytes after the last tensor");
  return archive;
}

void save(const WeightArchive& archive, const std::filesystem::path& path) {
  const auto bytes = serialize(archive);
  static std::atomic<std::uint64_t> counter{0};
  auto tmp = path;
  tmp += ".tmp" + std::to_string(std::hash<std::thread::id>{}(std::this_thread::get_id())) +
         "-" + std::to_string(counter.fetch_add(1));
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + tmp.string() + " for writing");
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("write failed: " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IoError("cannot move " + tmp.string() + " to " + path.string() + ": " +
                        ec.message());
}

WeightArchive load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open weight archive " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  return deserialize(bytes, path.string());
}

std::vector<LayerMismatch> check_against(const WeightArchive& archive, const ModelSpec& spec,
                                         LayerSelection which) {
  std::vector<LayerMismatch> out;
  for (const auto& layer : weighted_layers(spec)) {
    if (which == LayerSelection::frozen_only && layer.trainable) continue;
    if (which == LayerSelection::trainable_only && !layer.trainable) continue;
    LayerMismatch mismatch{layer.name, {}};
    const std::pair<std::string, const Shape*> wanted[] = {
        {layer.kernel_name(), &layer.kernel_shape}, {layer.bias_name(), &layer.bias_shape}};
    for (const auto& [name, shape] : wanted) {
      const Tensor* t = archive.find(name);
      if (!t)
        mismatch.problems.push_back("missing " + name);
      else if (t->shape() != *shape)
        mismatch.problems.push_back(name + " has shape " + shape_string(t->shape()) +
                                    ", expected " + shape_string(*shape));
    }
    if (!mismatch.problems.empty()) out.push_back(std::move(mismatch));
  }
  return out;
}

void validate_against(const WeightArchive& archive, const ModelSpec& spec,
                      LayerSelection which) {
  const auto mismatches = check_against(archive, spec, which);
  if (mismatches.empty()) return;
  std::ostringstream os;
  os << mismatches.size() << " layer(s) of " << kind_name(spec.kind)
     << " do not match the archive:";
  for (const auto& m : mismatches) {
    os << "\n  " << m.layer << ':';
    for (const auto& p : m.problems) os << ' ' << p << ';';
  }
  throw ArchiveError(os.str());
}

}  // namespace bcnet
