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

#include <stdexcept>
#include <string>

namespace bcnet {

// Every failure the toolkit raises derives from Error. The CLI maps the
// category to an exit code (usage 1, data 2, numeric 3).
enum class ErrorCategory { usage, data, numeric };

class Error : public std::runtime_error {
 public:
  Error(ErrorCategory category, const std::string& what)
      : std::runtime_error(what), category_(category) {}
  ErrorCategory category() const noexcept { return category_; }

 private:
  ErrorCategory category_;
};

#define BCNET_DEFINE_ERROR(Name, Category)                             \
  class Name : public Error {                                          \
   public:                                                             \
    explicit Name(const std::string& what) : Error(Category, what) {} \
  }

// Engine.
BCNET_DEFINE_ERROR(DimensionError, ErrorCategory::usage);
BCNET_DEFINE_ERROR(NumericError, ErrorCategory::numeric);
BCNET_DEFINE_ERROR(UsageError, ErrorCategory::usage);
BCNET_DEFINE_ERROR(EmptyBatchError, ErrorCategory::usage);

// Preprocessing.
BCNET_DEFINE_ERROR(CropError, ErrorCategory::data);
BCNET_DEFINE_ERROR(ImageError, ErrorCategory::data);

// Data and archives.
BCNET_DEFINE_ERROR(IoError, ErrorCategory::data);
BCNET_DEFINE_ERROR(SchemaError, ErrorCategory::data);
BCNET_DEFINE_ERROR(FormatError, ErrorCategory::data);
BCNET_DEFINE_ERROR(CorruptionError, ErrorCategory::data);
BCNET_DEFINE_ERROR(ArchiveError, ErrorCategory::data);
BCNET_DEFINE_ERROR(SpecError, ErrorCategory::usage);

#undef BCNET_DEFINE_ERROR

// Raised by the training loop when the loss stops being finite.
class DivergenceError : public Error {
 public:
  DivergenceError(const std::string& what, int epoch, int batch)
      : Error(ErrorCategory::numeric, what), epoch_(epoch), batch_(batch) {}
  int epoch() const noexcept { return epoch_; }
  int batch() const noexcept { return batch_; }

 private:
  int epoch_;
  int batch_;
};

}  // namespace bcnet
