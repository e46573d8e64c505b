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

#include <cstddef>
#include <initializer_list>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace bcnet {

using Shape = std::vector<std::size_t>;

std::size_t numel(const Shape& shape);
std::string shape_string(const Shape& shape);
bool all_finite(std::span<const float> values);

// Dense row-major float32 array. Every dimension is positive; rank 0 is a
// scalar holding one value. Construction rejects NaN/Inf. The optional grad
// buffer always matches the data length.
class Tensor {
 public:
  Tensor();
  explicit Tensor(Shape shape);
  Tensor(Shape shape, std::vector<float> data);

  static Tensor zeros(Shape shape) { return Tensor(std::move(shape)); }
  static Tensor filled(Shape shape, float value);
  static Tensor scalar(float value) { return Tensor({}, {value}); }

  const Shape& shape() const noexcept { return shape_; }
  std::size_t rank() const noexcept { return shape_.size(); }
  std::size_t dim(std::size_t axis) const;
  std::size_t size() const noexcept { return data_.size(); }

  std::span<float> data() noexcept { return data_; }
  std::span<const float> data() const noexcept { return data_; }
  float* ptr() noexcept { return data_.data(); }
  const float* ptr() const noexcept { return data_.data(); }
  float& operator[](std::size_t i) { return data_[i]; }
  float operator[](std::size_t i) const { return data_[i]; }

  // Moves the storage out; the tensor is left as a rank-0 zero.
  std::vector<float> release();

  bool has_grad() const noexcept { return grad_.has_value(); }
  // Allocates a zeroed grad buffer if absent.
  std::span<float> grad();
  std::span<const float> grad() const;
  void zero_grad();
  void clear_grad() noexcept { grad_.reset(); }

  // Same data under a new shape with identical element count.
  Tensor reshaped(Shape shape) const;

  // Raises NumericError naming `context` if any value is NaN/Inf.
  void check_finite(const char* context) const;

  // Shapes equal and data bit-identical (grad ignored).
  bool bit_equal(const Tensor& other) const;

 private:
  Shape shape_;
  std::vector<float> data_;
  std::optional<std::vector<float>> grad_;
};

}  // namespace bcnet
