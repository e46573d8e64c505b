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

#include "bcnet/training.hpp"

#include <algorithm>
#include <atomic>
#include <bit>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <map>
#include <mutex>
#include <thread>
#include <utility>

#include "bcnet/autograd.hpp"
#include "bcnet/error.hpp"
#include "bcnet/rng.hpp"

namespace bcnet {
namespace {

constexpr std::uint64_t kFlipKey = 0xf11b;

// 64-bit values stored as four 16-bit limbs, each exact in binary32.
void put_u64(std::vector<float>& out, std::uint64_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<float>((v >> (16 * i)) & 0xffffu));
}

void put_f64(std::vector<float>& out, double v) { put_u64(out, std::bit_cast<std::uint64_t>(v)); }

class LimbReader {
 public:
  LimbReader(const Tensor& t, std::string_view what) : t_(t), what_(what) {}
  std::uint64_t u64() {
    if (pos_ + 4 > t_.size()) throw ArchiveError(std::string(what_) + ": truncated state");
    std::uint64_t v = 0;
    for (int i = 0; i < 4; ++i) {
      const float f = t_[pos_++];
      if (!(f >= 0.0f && f <= 65535.0f) || f != std::floor(f))
        throw ArchiveError(std::string(what_) + ": malformed state value");
      v |= static_cast<std::uint64_t>(f) << (16 * i);
    }
    return v;
  }
  double f64() { return std::bit_cast<double>(u64()); }

 private:
  const Tensor& t_;
  std::string_view what_;
  std::size_t pos_ = 0;
};

Tensor limb_tensor(const std::vector<float>& limbs) {
  return Tensor({limbs.size()}, limbs);
}

std::vector<std::string> weight_names(const ModelSpec& spec, bool trainable_only) {
  std::vector<std::string> names;
  for (const auto& w : weighted_layers(spec)) {
    if (trainable_only && !w.trainable) continue;
    names.push_back(w.kernel_name());
    names.push_back(w.bias_name());
  }
  return names;
}

void put_adam(WeightArchive& out, const std::string& prefix, const AdamState& adam,
              const std::vector<std::string>& names) {
  if (adam.first_moment.size() != names.size()) return;
  for (std::size_t i = 0; i < names.size(); ++i) {
    out.insert(prefix + "adam.m." + names[i], adam.first_moment[i]);
    out.insert(prefix + "adam.v." + names[i], adam.second_moment[i]);
  }
}

AdamState get_adam(const WeightArchive& in, const std::string& prefix,
                   const std::vector<std::string>& names, const AdamConfig& config,
                   std::uint64_t step) {
  AdamState s;
  s.config = config;
  s.step = step;
  for (const auto& n : names) {
    s.first_moment.push_back(in.at(prefix + "adam.m." + n));
    s.second_moment.push_back(in.at(prefix + "adam.v." + n));
  }
  return s;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

}  // namespace

std::size_t TrainConfig::default_epochs(ModelKind kind) noexcept {
  return kind == ModelKind::vgg16_tl ? 40 : 100;
}

void TrainConfig::validate() const {
  auto positive = [](float v) { return std::isfinite(v) && v > 0.0f; };
  if (!positive(adam.lr)) throw UsageError("learning rate must be positive");
  if (!positive(adam.epsilon)) throw UsageError("epsilon must be positive");
  if (!positive(adam.beta1) || adam.beta1 >= 1.0f || !positive(adam.beta2) ||
      adam.beta2 >= 1.0f)
    throw UsageError("Adam betas must lie in (0, 1)");
  if (batch_size == 0) throw UsageError("batch size must be at least 1");
  if (max_epochs == 0) throw UsageError("max_epochs must be at least 1");
  if (patience == 0) throw UsageError("patience must be at least 1");
  if (folds < 2) throw UsageError("cross-validation needs at least 2 folds");
}

WeightArchive checkpoint_archive(const Checkpoint& checkpoint, const ModelSpec& spec) {
  WeightArchive out;
  for (const auto& name : weight_names(spec, false))
    out.insert(name, checkpoint.weights.at(name));
  put_adam(out, "", checkpoint.adam, weight_names(spec, true));
  std::vector<float> meta;
  put_u64(meta, checkpoint.epoch);
  put_f64(meta, checkpoint.best_val_mse);
  put_u64(meta, checkpoint.adam.step);
  out.insert("meta.checkpoint", limb_tensor(meta));
  return out;
}

Checkpoint checkpoint_from_archive(const WeightArchive& archive, const ModelSpec& spec,
                                   const AdamConfig& adam) {
  validate_against(archive, spec);
  Checkpoint c;
  for (const auto& name : weight_names(spec, false)) c.weights.insert(name, archive.at(name));
  LimbReader meta(archive.at("meta.checkpoint"), "meta.checkpoint");
  c.epoch = meta.u64();
  c.best_val_mse = meta.f64();
  const std::uint64_t step = meta.u64();
  c.adam = get_adam(archive, "", weight_names(spec, true), adam, step);
  return c;
}

void save_checkpoint(const Checkpoint& checkpoint, const ModelSpec& spec,
                     const std::filesystem::path& path) {
  save(checkpoint_archive(checkpoint, spec), path);
}

Checkpoint load_checkpoint(const std::filesystem::path& path, const ModelSpec& spec,
                           const AdamConfig& adam) {
  return checkpoint_from_archive(load(path), spec, adam);
}

EarlyStopping::EarlyStopping(std::size_t patience) : patience_(patience) {
  if (patience == 0) throw UsageError("patience must be at least 1");
}

bool EarlyStopping::update(std::size_t epoch, double val_loss) {
  if (val_loss < best_) {
    best_ = val_loss;
    best_epoch_ = epoch;
    stale_ = 0;
    return false;
  }
  ++stale_;
  return stale_ >= patience_;
}

void EarlyStopping::restore(std::size_t best_epoch, double best, std::size_t stale) {
  best_epoch_ = best_epoch;
  best_ = best;
  stale_ = stale;
}

FoldTrainer::FoldTrainer(const ModelSpec& spec, WeightArchive initial,
                         std::vector<Sample> train, std::vector<Sample> val,
                         const FrameSource& frames, TrainConfig config, std::size_t fold)
    : spec_(spec),
      weights_(std::move(initial)),
      train_(std::move(train)),
      val_(std::move(val)),
      frames_(frames),
      config_(config),
      fold_(fold),
      prefix_end_(first_trainable_layer(spec)),
      stopper_(config.patience) {
  config_.validate();
  validate_against(weights_, spec_);
  if (train_.empty()) throw UsageError("fold " + std::to_string(fold) + ": empty training split");
  if (val_.empty()) throw UsageError("fold " + std::to_string(fold) + ": empty validation split");
  param_names_ = weight_names(spec_, true);
  for (const auto& n : param_names_) params_.push_back(&weights_.at(n));
  adam_ = AdamState(config_.adam, params_);
  if (!config_.cache_frozen_prefix) prefix_end_ = 0;
  best_.weights = weights_;
  best_.adam = adam_;
}

std::size_t FoldTrainer::trainable_param_count() const {
  std::size_t n = 0;
  for (const Tensor* p : params_) n += p->size();
  return n;
}

Tensor FoldTrainer::trunk_input(const std::vector<Sample>& samples,
                                const std::vector<bool>& flips) {
  std::unique_ptr<bool[]> flip_buf(new bool[samples.size()]);
  for (std::size_t i = 0; i < samples.size(); ++i) flip_buf[i] = flips[i];
  std::span<const bool> flip_span(flip_buf.get(), samples.size());
  if (prefix_end_ == 0) return assemble_batch(frames_, samples, flip_span);

  auto key = [&](std::size_t i) { return samples[i].image_path + (flips[i] ? "|f" : "|n"); };
  std::vector<Sample> missing;
  std::vector<bool> missing_flip;
  std::vector<std::string> missing_keys;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const std::string k = key(i);
    if (prefix_cache_.count(k) ||
        std::find(missing_keys.begin(), missing_keys.end(), k) != missing_keys.end())
      continue;
    missing.push_back(samples[i]);
    missing_flip.push_back(flips[i]);
    missing_keys.push_back(k);
  }
  if (!missing.empty()) {
    std::unique_ptr<bool[]> mf(new bool[missing.size()]);
    for (std::size_t i = 0; i < missing.size(); ++i) mf[i] = missing_flip[i];
    Tensor raw = assemble_batch(frames_, missing, {mf.get(), missing.size()});
    Tensor out = forward_layers(spec_, weights_, std::move(raw), 0, prefix_end_);
    Shape per(out.shape().begin() + 1, out.shape().end());
    const std::size_t stride = numel(per);
    for (std::size_t i = 0; i < missing.size(); ++i) {
      std::vector<float> v(out.data().begin() + i * stride,
                           out.data().begin() + (i + 1) * stride);
      prefix_cache_.emplace(missing_keys[i], Tensor(per, std::move(v)));
    }
  }
  const Tensor& first = prefix_cache_.at(key(0));
  Shape shape{samples.size()};
  shape.insert(shape.end(), first.shape().begin(), first.shape().end());
  std::vector<float> data;
  data.reserve(numel(shape));
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const Tensor& t = prefix_cache_.at(key(i));
    data.insert(data.end(), t.data().begin(), t.data().end());
  }
  return Tensor(shape, std::move(data));
}

double FoldTrainer::train_batch(const std::vector<std::size_t>& batch, std::size_t epoch,
                                std::size_t batch_no) {
  std::vector<Sample> samples = gather(train_, batch);
  std::vector<bool> flips(samples.size(), false);
  std::vector<float> targets(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (config_.flip_augment)
      flips[i] = derive_seed(config_.seed, {kFlipKey, fold_, epoch, batch[i]}) & 1u;
    targets[i] = flips[i] ? -samples[i].steering_deg : samples[i].steering_deg;
  }
  try {
    ag::Tape tape;
    ag::Var x = tape.constant(trunk_input(samples, flips));
    ag::Var y = forward_graph(tape, spec_, weights_, x, prefix_end_);
    ag::Var loss = ag::mse_loss(y, Tensor({targets.size()}, targets));
    for (Tensor* p : params_) p->zero_grad();
    tape.backward(loss);
    const float value = tape.value(loss)[0];
    if (!std::isfinite(value)) throw NumericError("non-finite training loss");
    for (Tensor* p : params_)
      if (!all_finite(std::as_const(*p).grad()))
        throw NumericError("non-finite gradient for a trainable parameter");
    adam_step(params_, adam_);
    for (Tensor* p : params_) p->check_finite("parameter after Adam update");
    return value;
  } catch (const NumericError& e) {
    throw DivergenceError(std::string("fold ") + std::to_string(fold_) + ": " + e.what(),
                          static_cast<int>(epoch), static_cast<int>(batch_no));
  }
}

double FoldTrainer::validate() {
  double sum = 0.0;
  for (std::size_t start = 0; start < val_.size(); start += config_.batch_size) {
    const std::size_t stop = std::min(val_.size(), start + config_.batch_size);
    std::vector<Sample> chunk(val_.begin() + start, val_.begin() + stop);
    std::vector<bool> flips(chunk.size(), false);
    Tensor pred = forward_layers(spec_, weights_, trunk_input(chunk, flips), prefix_end_);
    for (std::size_t i = 0; i < chunk.size(); ++i) {
      const double d = static_cast<double>(chunk[i].steering_deg) - pred[i];
      sum += d * d;
    }
  }
  const double mse = sum / static_cast<double>(val_.size());
  if (!std::isfinite(mse))
    throw DivergenceError("fold " + std::to_string(fold_) + ": non-finite validation loss",
                          static_cast<int>(epochs_done_ + 1), -1);
  return mse;
}

bool FoldTrainer::step_epoch() {
  if (finished_) return false;
  const auto t0 = std::chrono::steady_clock::now();
  const std::size_t epoch = epochs_done_ + 1;
  const auto batches = batch_indices(train_.size(), config_.batch_size,
                                     derive_seed(config_.seed, {fold_}), epoch);
  double weighted = 0.0;
  for (std::size_t b = 0; b < batches.size(); ++b)
    weighted += static_cast<double>(train_batch(batches[b], epoch, b)) * batches[b].size();

  EpochRecord rec;
  rec.fold = fold_;
  rec.epoch = epoch;
  rec.train_mse = weighted / static_cast<double>(train_.size());
  rec.val_mse = validate();
  rec.seconds = config_.record_timing ? seconds_since(t0) : 0.0;
  history_.push_back(rec);
  epochs_done_ = epoch;

  const bool stop = stopper_.update(epoch, rec.val_mse);
  if (stopper_.best_epoch() == epoch) {
    best_.weights = weights_;
    best_.adam = adam_;
    best_.epoch = epoch;
    best_.best_val_mse = rec.val_mse;
  }
  finished_ = stop || epoch >= config_.max_epochs;
  if (on_epoch) on_epoch(rec);
  return !finished_;
}

FoldResult FoldTrainer::run() {
  while (step_epoch()) {
  }
  return result();
}

FoldResult FoldTrainer::result() const {
  FoldResult r;
  r.fold = fold_;
  r.best = best_;
  r.history = history_;
  r.stop_epoch = epochs_done_;
  return r;
}

WeightArchive FoldTrainer::state_archive() const {
  WeightArchive out;
  for (const auto& [name, t] : weights_) out.insert(name, t);
  put_adam(out, "", adam_, param_names_);
  for (const auto& [name, t] : best_.weights) out.insert("best." + name, t);
  put_adam(out, "best.", best_.adam, param_names_);

  std::vector<float> meta;
  put_u64(meta, fold_);
  put_u64(meta, adam_.step);
  put_u64(meta, epochs_done_);
  put_u64(meta, finished_ ? 1 : 0);
  put_u64(meta, stopper_.best_epoch());
  put_f64(meta, stopper_.best());
  put_u64(meta, stopper_.stale_epochs());
  put_u64(meta, best_.epoch);
  put_f64(meta, best_.best_val_mse);
  put_u64(meta, best_.adam.step);
  out.insert("meta.state", limb_tensor(meta));

  if (!history_.empty()) {
    std::vector<float> h;
    for (const auto& r : history_) {
      put_u64(h, r.fold);
      put_u64(h, r.epoch);
      put_f64(h, r.train_mse);
      put_f64(h, r.val_mse);
      put_f64(h, r.seconds);
    }
    out.insert("meta.history", Tensor({history_.size(), 20}, std::move(h)));
  }
  return out;
}

void FoldTrainer::restore_state(const WeightArchive& state) {
  LimbReader meta(state.at("meta.state"), "meta.state");
  if (meta.u64() != fold_) throw ArchiveError("training state belongs to a different fold");
  const std::uint64_t step = meta.u64();
  const std::size_t epochs_done = meta.u64();
  const bool finished = meta.u64() != 0;
  const std::size_t stop_best_epoch = meta.u64();
  const double stop_best = meta.f64();
  const std::size_t stale = meta.u64();
  const std::size_t best_epoch = meta.u64();
  const double best_val = meta.f64();
  const std::uint64_t best_step = meta.u64();

  std::vector<EpochRecord> history;
  if (const Tensor* h = state.find("meta.history")) {
    LimbReader r(*h, "meta.history");
    for (std::size_t i = 0; i < h->dim(0); ++i) {
      EpochRecord rec;
      rec.fold = r.u64();
      rec.epoch = r.u64();
      rec.train_mse = r.f64();
      rec.val_mse = r.f64();
      rec.seconds = r.f64();
      history.push_back(rec);
    }
  }
  if (history.size() != epochs_done) throw ArchiveError("training state: history length mismatch");

  // Stage everything before touching live state so a bad archive leaves the
  // trainer unchanged.
  WeightArchive weights = weights_;
  WeightArchive best_weights = weights_;
  for (const auto& [name, t] : weights_) {
    const Tensor& cur = state.at(name);
    const Tensor& best = state.at("best." + name);
    if (cur.shape() != t.shape() || best.shape() != t.shape())
      throw ArchiveError("training state: shape mismatch for " + name);
    weights.set(name, cur);
    best_weights.set(name, best);
  }
  AdamState adam = get_adam(state, "", param_names_, config_.adam, step);
  AdamState best_adam = get_adam(state, "best.", param_names_, config_.adam, best_step);

  for (const auto& [name, t] : weights) weights_.at(name) = t;
  adam_ = std::move(adam);
  best_.weights = std::move(best_weights);
  best_.adam = std::move(best_adam);
  best_.epoch = best_epoch;
  best_.best_val_mse = best_val;
  stopper_.restore(stop_best_epoch, stop_best, stale);
  history_ = std::move(history);
  epochs_done_ = epochs_done;
  finished_ = finished;
}

void FoldTrainer::save_state(const std::filesystem::path& path) const {
  save(state_archive(), path);
}

void FoldTrainer::load_state(const std::filesystem::path& path) { restore_state(load(path)); }

FoldResult train_fold(const ModelSpec& spec, WeightArchive initial, std::vector<Sample> train,
                      std::vector<Sample> val, const FrameSource& frames,
                      const TrainConfig& config, std::size_t fold) {
  FoldTrainer trainer(spec, std::move(initial), std::move(train), std::move(val), frames, config,
                      fold);
  return trainer.run();
}

double evaluate(const ModelSpec& spec, const WeightArchive& weights,
                const std::vector<Sample>& pool, const FrameSource& frames,
                std::size_t batch_size) {
  if (pool.empty()) throw UsageError("evaluate: empty pool");
  if (batch_size == 0) throw UsageError("evaluate: batch size must be at least 1");
  validate_against(weights, spec);
  double sum = 0.0;
  for (std::size_t start = 0; start < pool.size(); start += batch_size) {
    const std::size_t stop = std::min(pool.size(), start + batch_size);
    std::span<const Sample> chunk(pool.data() + start, stop - start);
    Tensor pred = forward_layers(spec, weights, assemble_batch(frames, chunk));
    for (std::size_t i = 0; i < chunk.size(); ++i) {
      const double d = static_cast<double>(chunk[i].steering_deg) - pred[i];
      sum += d * d;
    }
  }
  const double mse = sum / static_cast<double>(pool.size());
  if (!std::isfinite(mse)) throw NumericError("evaluate: non-finite MSE");
  return mse;
}

CrossValidationReport cross_validate(const ModelSpec& spec, const WeightArchive& initial,
                                     const std::vector<Sample>& pool, const FoldPlan& plan,
                                     const FrameSource& frames, const TrainConfig& config,
                                     std::span<const std::size_t> order, std::size_t jobs,
                                     std::function<void(const EpochRecord&)> progress) {
  config.validate();
  if (plan.pool_size() != pool.size())
    throw UsageError("fold plan covers " + std::to_string(plan.pool_size()) +
                     " samples but the pool has " + std::to_string(pool.size()));
  const std::size_t k = plan.k();
  std::vector<std::size_t> sequence;
  if (order.empty()) {
    for (std::size_t f = 0; f < k; ++f) sequence.push_back(f);
  } else {
    sequence.assign(order.begin(), order.end());
    std::vector<std::size_t> sorted = sequence;
    std::sort(sorted.begin(), sorted.end());
    for (std::size_t f = 0; f < k; ++f)
      if (sorted.size() != k || sorted[f] != f)
        throw UsageError("fold order must be a permutation of 0.." + std::to_string(k - 1));
  }

  CrossValidationReport report;
  report.folds.resize(k);
  std::mutex progress_mutex;
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;

  auto worker = [&] {
    for (;;) {
      const std::size_t slot = next.fetch_add(1);
      if (slot >= sequence.size()) return;
      {
        std::lock_guard lock(failure_mutex);
        if (failure) return;
      }
      const std::size_t f = sequence[slot];
      try {
        FoldTrainer trainer(spec, initial, gather(pool, plan.complement(f)),
                            gather(pool, plan.members(f)), frames, config, f);
        if (progress)
          trainer.on_epoch = [&](const EpochRecord& r) {
            std::lock_guard lock(progress_mutex);
            progress(r);
          };
        report.folds[f] = trainer.run();
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        return;
      }
    }
  };

  const std::size_t threads = std::max<std::size_t>(1, std::min(jobs, k));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool_threads;
    for (std::size_t i = 0; i < threads; ++i) pool_threads.emplace_back(worker);
    for (auto& t : pool_threads) t.join();
  }
  if (failure) std::rethrow_exception(failure);

  double sum = 0.0;
  for (const auto& r : report.folds) sum += r.best.best_val_mse;
  report.aggregate_val_mse = sum / static_cast<double>(k);
  return report;
}

std::string curve_csv(ModelKind kind, std::span<const FoldResult> folds) {
  std::string out = "model,fold,epoch,train_mse,val_mse,seconds\n";
  for (const auto& f : folds)
    for (const auto& r : f.history)
      out += std::string(kind_name(kind)) + "," + std::to_string(r.fold) + "," +
             std::to_string(r.epoch) + "," + fmt(r.train_mse) + "," + fmt(r.val_mse) + "," +
             fmt(r.seconds) + "\n";
  return out;
}

std::string curve_mean_csv(ModelKind kind, std::span<const FoldResult> folds) {
  struct Acc {
    std::size_t n = 0;
    double train = 0, val = 0, seconds = 0;
  };
  std::map<std::size_t, Acc> by_epoch;
  for (const auto& f : folds)
    for (const auto& r : f.history) {
      Acc& a = by_epoch[r.epoch];
      ++a.n;
      a.train += r.train_mse;
      a.val += r.val_mse;
      a.seconds += r.seconds;
    }
  std::string out = "model,epoch,folds,train_mse,val_mse,seconds\n";
  for (const auto& [epoch, a] : by_epoch) {
    const double n = static_cast<double>(a.n);
    out += std::string(kind_name(kind)) + "," + std::to_string(epoch) + "," +
           std::to_string(a.n) + "," + fmt(a.train / n) + "," + fmt(a.val / n) + "," +
           fmt(a.seconds / n) + "\n";
  }
  return out;
}

}  // namespace bcnet
