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

// Mini-batch Adam training with freeze-mask enforcement, early stopping,
// k-fold cross-validation and resumable checkpoints.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <limits>
#include <memory>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "bcnet/adam.hpp"
#include "bcnet/data.hpp"
#include "bcnet/frames.hpp"
#include "bcnet/model_zoo.hpp"
#include "bcnet/weights_io.hpp"

namespace bcnet {

struct TrainConfig {
  ModelKind model = ModelKind::nvidia;
  AdamConfig adam;
  std::size_t batch_size = 64;
  std::size_t max_epochs = 100;
  std::size_t patience = 5;
  std::uint64_t seed = 1;
  std::size_t folds = 4;
  bool flip_augment = false;
  // Keep the output of a frozen leading block per frame instead of
  // recomputing it every epoch.
  bool cache_frozen_prefix = true;
  // Wall-clock seconds per epoch; off keeps histories reproducible.
  bool record_timing = false;

  // 100 for the NVIDIA variants, 40 for vgg16-tl.
  static std::size_t default_epochs(ModelKind kind) noexcept;
  // UsageError on non-positive rates, zero patience/epochs/batch size.
  void validate() const;
};

struct EpochRecord {
  std::size_t fold = 0;
  std::size_t epoch = 0;  // 1-based
  double train_mse = 0.0;
  double val_mse = 0.0;
  double seconds = 0.0;
};

struct Checkpoint {
  WeightArchive weights;
  AdamState adam;
  std::size_t epoch = 0;
  double best_val_mse = std::numeric_limits<double>::infinity();
};

// Weights under their layer names plus "adam.m.*", "adam.v.*" and "meta.*"
// entries; a checkpoint file is therefore also a usable weight archive.
WeightArchive checkpoint_archive(const Checkpoint& checkpoint, const ModelSpec& spec);
Checkpoint checkpoint_from_archive(const WeightArchive& archive, const ModelSpec& spec,
                                   const AdamConfig& adam = {});
void save_checkpoint(const Checkpoint& checkpoint, const ModelSpec& spec,
                     const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path, const ModelSpec& spec,
                           const AdamConfig& adam = {});

// Stops once the validation loss has failed to strictly improve for
// `patience` consecutive epochs.
class EarlyStopping {
 public:
  explicit EarlyStopping(std::size_t patience);
  // Returns true when training should stop after `epoch`.
  bool update(std::size_t epoch, double val_loss);
  std::size_t best_epoch() const noexcept { return best_epoch_; }
  double best() const noexcept { return best_; }
  std::size_t stale_epochs() const noexcept { return stale_; }
  bool improved() const noexcept { return stale_ == 0 && best_epoch_ != 0; }
  void restore(std::size_t best_epoch, double best, std::size_t stale);

 private:
  std::size_t patience_;
  std::size_t best_epoch_ = 0;
  double best_ = std::numeric_limits<double>::infinity();
  std::size_t stale_ = 0;
};

struct FoldResult {
  std::size_t fold = 0;
  Checkpoint best;
  std::vector<EpochRecord> history;
  std::size_t stop_epoch = 0;
};

class FoldTrainer {
 public:
  FoldTrainer(const ModelSpec& spec, WeightArchive initial, std::vector<Sample> train,
              std::vector<Sample> val, const FrameSource& frames, TrainConfig config,
              std::size_t fold = 0);
  FoldTrainer(const FoldTrainer&) = delete;
  FoldTrainer& operator=(const FoldTrainer&) = delete;

  // One epoch of updates followed by validation. Returns false once training
  // has finished. Throws DivergenceError on a non-finite loss.
  bool step_epoch();
  FoldResult run();

  bool finished() const noexcept { return finished_; }
  std::size_t epochs_done() const noexcept { return epochs_done_; }
  const WeightArchive& weights() const noexcept { return weights_; }
  const AdamState& adam() const noexcept { return adam_; }
  const std::vector<EpochRecord>& history() const noexcept { return history_; }
  const Checkpoint& best() const noexcept { return best_; }
  // Parameters handed to the optimizer.
  std::size_t trainable_param_count() const;
  std::size_t optimizer_steps() const noexcept { return adam_.step; }
  FoldResult result() const;

  // Everything needed to continue bit-identically.
  WeightArchive state_archive() const;
  void restore_state(const WeightArchive& state);
  void save_state(const std::filesystem::path& path) const;
  void load_state(const std::filesystem::path& path);

  std::function<void(const EpochRecord&)> on_epoch;

 private:
  Tensor trunk_input(const std::vector<Sample>& samples, const std::vector<bool>& flips);
  double train_batch(const std::vector<std::size_t>& batch, std::size_t epoch,
                     std::size_t batch_no);
  double validate();

  const ModelSpec& spec_;
  WeightArchive weights_;
  std::vector<Sample> train_;
  std::vector<Sample> val_;
  const FrameSource& frames_;
  TrainConfig config_;
  std::size_t fold_;
  std::vector<Tensor*> params_;
  std::vector<std::string> param_names_;
  AdamState adam_;
  std::size_t prefix_end_;
  std::unordered_map<std::string, Tensor> prefix_cache_;
  EarlyStopping stopper_;
  Checkpoint best_;
  std::vector<EpochRecord> history_;
  std::size_t epochs_done_ = 0;
  bool finished_ = false;
};

FoldResult train_fold(const ModelSpec& spec, WeightArchive initial,
                      std::vector<Sample> train, std::vector<Sample> val,
                      const FrameSource& frames, const TrainConfig& config,
                      std::size_t fold = 0);

// MSE over the whole pool in squared degrees: one ordered pass, no
// updates. UsageError on an empty pool.
double evaluate(const ModelSpec& spec, const WeightArchive& weights,
                const std::vector<Sample>& pool, const FrameSource& frames,
                std::size_t batch_size = 64);

struct CrossValidationReport {
  std::vector<FoldResult> folds;  // indexed by fold id
  double aggregate_val_mse = 0.0;  // mean of per-fold best val MSE
};

// Trains fold f on the pool minus fold f and validates on fold f, every fold
// starting from `initial`. `order` permutes execution order (results are
// keyed by fold id); `jobs` > 1 runs folds concurrently.
CrossValidationReport cross_validate(const ModelSpec& spec, const WeightArchive& initial,
                                     const std::vector<Sample>& pool, const FoldPlan& plan,
                                     const FrameSource& frames, const TrainConfig& config,
                                     std::span<const std::size_t> order = {},
                                     std::size_t jobs = 1,
                                     std::function<void(const EpochRecord&)> progress = {});

// Per-fold curve, columns model,fold,epoch,train_mse,val_mse,seconds.
std::string curve_csv(ModelKind kind, std::span<const FoldResult> folds);
// Fold-averaged curve, columns model,epoch,folds,train_mse,val_mse,seconds;
// an epoch averages over the folds that reached it.
std::string curve_mean_csv(ModelKind kind, std::span<const FoldResult> folds);

}  // namespace bcnet
