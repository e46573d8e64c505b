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

// bcnet: command-line front end.
//
//   bcnet report-params [--csv FILE] [--out DIR]
//   bcnet train --model KIND --log FILE [--images DIR] --out DIR [...]
//   bcnet evaluate --model KIND --weights FILE --log FILE [--split all|test]
//   bcnet gradcheck [--instances N] [--inject-fault OP]
//   bcnet make-toy --out DIR [--count N] [--seed S]
//
// Exit codes: 0 ok, 1 usage, 2 data, 3 numeric (divergence or a failed
// gradient check). Output files are written only after a command succeeds.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "bcnet/data.hpp"
#include "bcnet/error.hpp"
#include "bcnet/frames.hpp"
#include "bcnet/gradcheck.hpp"
#include "bcnet/kernels.hpp"
#include "bcnet/manifest.hpp"
#include "bcnet/model_zoo.hpp"
#include "bcnet/ops.hpp"
#include "bcnet/toy_data.hpp"
#include "bcnet/training.hpp"
#include "bcnet/weights_io.hpp"

namespace fs = std::filesystem;
using namespace bcnet;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitNumeric = 3;

std::string fmt(const char* pattern, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, pattern, v);
  return buf;
}

// Shortest of %.15g/%.17g that reads back to the same double.
std::string exact(double v) {
  std::string s = fmt("%.15g", v);
  return std::stod(s) == v ? s : fmt("%.17g", v);
}

void write_text(const fs::path& path, const std::string& text) {
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    out << text;
    if (!out) throw IoError("cannot write " + path.string());
  }
  fs::rename(tmp, path);
}

// Binds a CLI option to a manifest key: values given on the command line win,
// the rest come from --manifest when one is supplied.
struct Binding {
  std::string key;
  CLI::Option* option;
  std::function<void(const std::string&)> assign;
  std::function<std::string()> render;
};

template <typename T>
std::string render_value(const T& v) {
  if constexpr (std::is_same_v<T, std::string>) {
    return v;
  } else if constexpr (std::is_same_v<T, bool>) {
    return v ? "true" : "false";
  } else if constexpr (std::is_floating_point_v<T>) {
    return exact(v);
  } else {
    return std::to_string(v);
  }
}

template <typename T>
void assign_value(T& target, const std::string& text, const std::string& key) {
  try {
    if constexpr (std::is_same_v<T, std::string>) {
      target = text;
    } else if constexpr (std::is_same_v<T, bool>) {
      if (text == "true" || text == "1") target = true;
      else if (text == "false" || text == "0") target = false;
      else throw std::invalid_argument(text);
    } else if constexpr (std::is_floating_point_v<T>) {
      std::size_t used = 0;
      target = static_cast<T>(std::stod(text, &used));
      if (used != text.size()) throw std::invalid_argument(text);
    } else {
      std::size_t used = 0;
      target = static_cast<T>(std::stoull(text, &used));
      if (used != text.size()) throw std::invalid_argument(text);
    }
  } catch (const std::logic_error&) {
    throw UsageError("manifest: bad value '" + text + "' for " + key);
  }
}

class Bindings {
 public:
  template <typename T>
  void add(const std::string& key, CLI::Option* option, T& target) {
    items_.push_back({key, option,
                      [&target, key](const std::string& s) { assign_value(target, s, key); },
                      [&target] { return render_value(target); }});
  }

  void apply(const RunManifest& manifest) const {
    for (const auto& b : items_) {
      if (b.option->count() > 0) continue;
      if (auto v = manifest.get(b.key)) b.assign(*v);
    }
  }

  void record(RunManifest& manifest) const {
    for (const auto& b : items_) manifest.set(b.key, b.render());
  }

 private:
  std::vector<Binding> items_;
};

RunManifest base_manifest(const std::string& command) {
  RunManifest m;
  m.set("command", command);
  m.set("version", BCNET_VERSION);
  return m;
}

// ---------------------------------------------------------------- report-params

struct ParamRow {
  ModelKind kind;
  std::size_t total;
  std::size_t trainable;
  std::optional<double> pruning_pct;
};

std::vector<ParamRow> param_rows() {
  const std::size_t base = count_params(build(ModelKind::nvidia), true);
  std::vector<ParamRow> rows;
  for (ModelKind k : kAllModelKinds) {
    const ModelSpec spec = build(k);
    ParamRow r{k, count_params(spec, false), count_params(spec, true), std::nullopt};
    if (k != ModelKind::vgg16_tl)
      r.pruning_pct = 100.0 * (1.0 - static_cast<double>(r.trainable) / static_cast<double>(base));
    rows.push_back(r);
  }
  return rows;
}

std::string params_table(const std::vector<ParamRow>& rows) {
  std::ostringstream out;
  char line[160];
  std::snprintf(line, sizeof line, "%-18s %14s %14s %10s\n", "model", "total_params",
                "trainable", "pruning");
  out << line;
  for (const auto& r : rows) {
    const std::string pct = r.pruning_pct ? fmt("%.2f%%", *r.pruning_pct) : "-";
    std::snprintf(line, sizeof line, "%-18s %14zu %14zu %10s\n", kind_name(r.kind), r.total,
                  r.trainable, pct.c_str());
    out << line;
  }
  return out.str();
}

std::string params_csv(const std::vector<ParamRow>& rows) {
  std::string out = "model,total_params,trainable_params,pruning_pct\n";
  for (const auto& r : rows)
    out += std::string(kind_name(r.kind)) + "," + std::to_string(r.total) + "," +
           std::to_string(r.trainable) + "," +
           (r.pruning_pct ? fmt("%.2f", *r.pruning_pct) : std::string()) + "\n";
  return out;
}

// ---------------------------------------------------------------- shared data

struct DataOptions {
  std::string log;
  std::string log_format = "csv";
  std::string images;
  double crop_top = 0.35;
  std::string cache_dir;
};

void add_data_options(CLI::App* cmd, DataOptions& d, Bindings& b) {
  b.add("log", cmd->add_option("--log", d.log, "Driving log (CSV: image_path,steering_deg)"),
        d.log);
  b.add("log_format",
        cmd->add_option("--log-format", d.log_format, "csv or space")
            ->check(CLI::IsMember({"csv", "space"})),
        d.log_format);
  b.add("images", cmd->add_option("--images", d.images, "Image root (default: log directory)"),
        d.images);
  b.add("crop_top", cmd->add_option("--crop-top", d.crop_top, "Fraction of top rows removed"),
        d.crop_top);
  cmd->add_option("--cache", d.cache_dir, "Directory for preprocessed frame cache");
}

DrivingLog read_log(const DataOptions& d) {
  if (d.log.empty()) throw UsageError("--log is required");
  return load_log(d.log, d.log_format == "space" ? LogFormat::space_separated : LogFormat::csv);
}

ImageFrameSource frame_source(const DataOptions& d) {
  fs::path root = d.images.empty() ? fs::path(d.log).parent_path() : fs::path(d.images);
  ImageFrameSource::Options opt;
  opt.preprocess.top_fraction = d.crop_top;
  opt.disk_cache = d.cache_dir;
  if (!opt.disk_cache.empty()) fs::create_directories(opt.disk_cache);
  return ImageFrameSource(root, opt);
}

struct SplitOptions {
  double train_fraction = 0.8;
  std::uint64_t seed = 1;
  bool sequential = false;
};

// ---------------------------------------------------------------- train

struct TrainOptions {
  DataOptions data;
  SplitOptions split;
  std::string model = "nvidia";
  std::size_t epochs = 0;  // 0: per-model default
  std::size_t batch_size = 64;
  double lr = 1e-3;
  std::size_t patience = 5;
  std::size_t folds = 4;
  std::string pretrained;
  bool flip_augment = false;
  std::size_t jobs = 1;
  bool timing = false;
  std::string manifest;
  std::string out;
};

int run_train(TrainOptions& o, const Bindings& bindings) {
  if (!o.manifest.empty()) bindings.apply(RunManifest::load(o.manifest));
  if (o.out.empty()) throw UsageError("--out is required");
  const ModelKind kind = parse_kind(o.model);
  const ModelSpec spec = build(kind);

  TrainConfig cfg;
  cfg.model = kind;
  cfg.adam.lr = static_cast<float>(o.lr);
  cfg.batch_size = o.batch_size;
  cfg.max_epochs = o.epochs ? o.epochs : TrainConfig::default_epochs(kind);
  cfg.patience = o.patience;
  cfg.seed = o.split.seed;
  cfg.folds = o.folds;
  cfg.flip_augment = o.flip_augment;
  cfg.record_timing = o.timing;
  cfg.validate();

  WeightArchive initial = init_weights(spec, o.split.seed);
  if (!o.pretrained.empty()) {
    const WeightArchive pre = load(o.pretrained);
    validate_against(pre, spec, LayerSelection::frozen_only);
    apply_pretrained(spec, initial, pre);
  } else if (kind == ModelKind::vgg16_tl) {
    std::cerr << "warning: vgg16-tl without --pretrained keeps randomly initialised frozen "
                 "blocks\n";
  }

  const DrivingLog log = read_log(o.data);
  const TrainTestSplit split =
      split_train_test(log.samples, o.split.train_fraction, o.split.seed, o.split.sequential);
  if (split.train.size() < cfg.folds)
    throw UsageError("training pool of " + std::to_string(split.train.size()) +
                     " samples cannot form " + std::to_string(cfg.folds) + " folds");
  if (split.test.empty()) throw UsageError("train fraction leaves no test samples");
  const FoldPlan plan(split.train.size(), cfg.folds, o.split.seed);
  ImageFrameSource frames = frame_source(o.data);

  auto progress = [](const EpochRecord& r) {
    std::cerr << "fold " << r.fold << " epoch " << r.epoch << " train_mse "
              << fmt("%.6g", r.train_mse) << " val_mse " << fmt("%.6g", r.val_mse) << "\n";
  };
  const CrossValidationReport report =
      cross_validate(spec, initial, split.train, plan, frames, cfg, {}, o.jobs, progress);

  std::size_t best_fold = 0;
  for (std::size_t f = 1; f < report.folds.size(); ++f)
    if (report.folds[f].best.best_val_mse < report.folds[best_fold].best.best_val_mse)
      best_fold = f;
  const WeightArchive& final_weights = report.folds[best_fold].best.weights;
  const double test_mse = evaluate(spec, final_weights, split.test, frames, cfg.batch_size);

  RunManifest manifest = base_manifest("train");
  bindings.record(manifest);
  manifest.set("out", o.out);
  manifest.set("epochs", std::to_string(cfg.max_epochs));

  RunManifest results;
  results.set("model", kind_name(kind));
  results.set("train_pool", std::to_string(split.train.size()));
  results.set("test_pool", std::to_string(split.test.size()));
  results.set("aggregate_val_mse", exact(report.aggregate_val_mse));
  results.set("best_fold", std::to_string(best_fold));
  results.set("test_mse", exact(test_mse));
  results.set("trainable_params", std::to_string(count_params(spec, true)));
  for (const auto& f : report.folds) {
    const std::string p = "fold" + std::to_string(f.fold) + ".";
    results.set(p + "best_epoch", std::to_string(f.best.epoch));
    results.set(p + "best_val_mse", exact(f.best.best_val_mse));
    results.set(p + "stop_epoch", std::to_string(f.stop_epoch));
  }

  const fs::path out(o.out);
  fs::create_directories(out);
  for (const auto& f : report.folds)
    save_checkpoint(f.best, spec, out / ("fold" + std::to_string(f.fold) + ".bcwt"));
  save(final_weights, out / "final.bcwt");
  write_text(out / "curve.csv", curve_csv(kind, report.folds));
  write_text(out / "curve_mean.csv", curve_mean_csv(kind, report.folds));
  write_text(out / "results.txt", results.to_string());
  write_text(out / "manifest.txt", manifest.to_string());

  std::cout << "model " << kind_name(kind) << "\n"
            << "aggregate_val_mse " << fmt("%.6f", report.aggregate_val_mse) << "\n"
            << "best_fold " << best_fold << "\n"
            << "test_mse " << fmt("%.6f", test_mse) << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------- evaluate

struct EvalOptions {
  DataOptions data;
  SplitOptions split;
  std::string model = "nvidia";
  std::string weights;
  std::string which = "all";
  std::size_t batch_size = 64;
  std::string manifest;
  std::string out;
};

int run_evaluate(EvalOptions& o, const Bindings& bindings) {
  if (!o.manifest.empty()) bindings.apply(RunManifest::load(o.manifest));
  if (o.weights.empty()) throw UsageError("--weights is required");
  const ModelKind kind = parse_kind(o.model);
  const ModelSpec spec = build(kind);
  const WeightArchive weights = load(o.weights);
  validate_against(weights, spec);

  const DrivingLog log = read_log(o.data);
  std::vector<Sample> pool = log.samples;
  if (o.which == "test")
    pool = split_train_test(log.samples, o.split.train_fraction, o.split.seed,
                            o.split.sequential)
               .test;
  else if (o.which == "train")
    pool = split_train_test(log.samples, o.split.train_fraction, o.split.seed,
                            o.split.sequential)
               .train;
  ImageFrameSource frames = frame_source(o.data);
  const double mse = evaluate(spec, weights, pool, frames, o.batch_size);

  if (!o.out.empty()) {
    RunManifest manifest = base_manifest("evaluate");
    bindings.record(manifest);
    RunManifest result;
    result.set("model", kind_name(kind));
    result.set("pool", std::to_string(pool.size()));
    result.set("mse", exact(mse));
    fs::create_directories(o.out);
    write_text(fs::path(o.out) / "evaluation.txt", result.to_string());
    write_text(fs::path(o.out) / "manifest.txt", manifest.to_string());
  }
  std::cout << "model " << kind_name(kind) << "\n"
            << "samples " << pool.size() << "\n"
            << "mse " << fmt("%.9g", mse) << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------- gradcheck

struct GradOptions {
  gradcheck::Options check;
  std::vector<std::string> ops;
  std::vector<std::string> faults;
};

int run_gradcheck(const GradOptions& o) {
  for (const auto& f : o.faults) ops::testing::inject_fault(f);
  std::vector<gradcheck::OpReport> reports;
  if (o.ops.empty()) {
    reports = gradcheck::check_all(o.check);
  } else {
    for (const auto& op : o.ops) reports.push_back(gradcheck::check_op(op, o.check));
  }
  ops::testing::clear_faults();

  bool ok = true;
  char line[160];
  std::snprintf(line, sizeof line, "%-10s %9s %9s %14s  %s\n", "op", "instances", "elements",
                "max_rel_err", "status");
  std::cout << "isa " << kernels::isa_name(kernels::active_isa()) << ", tolerance "
            << fmt("%g", o.check.tolerance) << "\n"
            << line;
  for (const auto& r : reports) {
    std::snprintf(line, sizeof line, "%-10s %9zu %9zu %14.3e  %s\n", r.op.c_str(), r.instances,
                  r.elements, r.max_relative_error, r.passed ? "pass" : "FAIL");
    std::cout << line;
    ok = ok && r.passed;
  }
  if (!ok) {
    std::cerr << "gradient check failed:";
    for (const auto& r : reports)
      if (!r.passed) std::cerr << " " << r.op;
    std::cerr << "\n";
  }
  return ok ? kExitOk : kExitNumeric;
}

// ---------------------------------------------------------------- make-toy

struct ToyOptions {
  std::string out;
  std::size_t count = 64;
  std::uint64_t seed = 7;
  double max_angle = 25.0;
};

int run_make_toy(const ToyOptions& o) {
  if (o.count == 0) throw UsageError("--count must be at least 1");
  const ToyDataset data = make_toy_dataset(o.count, o.seed, static_cast<float>(o.max_angle));
  write_toy_dataset(data, o.out);
  RunManifest manifest = base_manifest("make-toy");
  manifest.set("out", o.out);
  manifest.set("count", std::to_string(o.count));
  manifest.set("seed", std::to_string(o.seed));
  manifest.set("max_angle", exact(o.max_angle));
  write_text(fs::path(o.out) / "manifest.txt", manifest.to_string());
  std::cout << "wrote " << o.count << " frames and log.csv to " << o.out << "\n";
  return kExitOk;
}

int exit_code(const Error& e) {
  switch (e.category()) {
    case ErrorCategory::usage:
      return kExitUsage;
    case ErrorCategory::data:
      return kExitData;
    case ErrorCategory::numeric:
      return kExitNumeric;
  }
  return kExitData;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"bcnet: steering-angle regression toolkit"};
  app.set_version_flag("--version", BCNET_VERSION);
  app.require_subcommand(1);

  // report-params
  std::string params_csv_path, params_out;
  auto* report = app.add_subcommand("report-params", "Parameter counts and pruning for all models");
  report->add_option("--csv", params_csv_path, "Write the table as CSV ('-' for stdout)");
  report->add_option("--out", params_out, "Directory for params.csv and manifest.txt");

  // train
  TrainOptions train;
  Bindings train_bind;
  auto* tr = app.add_subcommand("train", "Cross-validated training run");
  train_bind.add("model", tr->add_option("--model", train.model, "Model kind"), train.model);
  add_data_options(tr, train.data, train_bind);
  train_bind.add("epochs", tr->add_option("--epochs", train.epochs, "Maximum epochs per fold"),
                 train.epochs);
  train_bind.add("batch_size", tr->add_option("--batch-size", train.batch_size, "Samples per Adam step"),
                 train.batch_size);
  train_bind.add("lr", tr->add_option("--lr", train.lr, "Adam learning rate"), train.lr);
  train_bind.add("seed", tr->add_option("--seed", train.split.seed, "Seed for split, folds, batches and init"), train.split.seed);
  train_bind.add("patience", tr->add_option("--patience", train.patience, "Epochs without improvement before stopping"), train.patience);
  train_bind.add("folds", tr->add_option("--folds", train.folds, "Cross-validation folds"), train.folds);
  train_bind.add("pretrained",
                 tr->add_option("--pretrained", train.pretrained, "BCWT with frozen layers"),
                 train.pretrained);
  train_bind.add("flip_augment", tr->add_flag("--flip-augment", train.flip_augment, "Randomly mirror frames and negate angles"),
                 train.flip_augment);
  train_bind.add("sequential_split",
                 tr->add_flag("--sequential-split", train.split.sequential,
                              "Hold out the last 20% instead of a seeded random 20%"),
                 train.split.sequential);
  train_bind.add("train_fraction", tr->add_option("--train-fraction", train.split.train_fraction, "Share of the log used for training"),
                 train.split.train_fraction);
  tr->add_option("--jobs", train.jobs, "Folds trained concurrently");
  tr->add_flag("--timing", train.timing, "Record wall-clock seconds per epoch");
  tr->add_option("--manifest", train.manifest, "Rerun from a manifest; flags override it");
  tr->add_option("--out", train.out, "Output directory");

  // evaluate
  EvalOptions ev;
  Bindings ev_bind;
  auto* evc = app.add_subcommand("evaluate", "MSE of a weight archive over a pool");
  ev_bind.add("model", evc->add_option("--model", ev.model, "Model kind"), ev.model);
  add_data_options(evc, ev.data, ev_bind);
  evc->add_option("--weights", ev.weights, "BCWT weights or checkpoint");
  evc->add_option("--split", ev.which, "all, train or test")
      ->check(CLI::IsMember({"all", "train", "test"}));
  ev_bind.add("seed", evc->add_option("--seed", ev.split.seed, "Split seed of the training run"), ev.split.seed);
  ev_bind.add("sequential_split", evc->add_flag("--sequential-split", ev.split.sequential, "Split as train --sequential-split"),
              ev.split.sequential);
  ev_bind.add("train_fraction", evc->add_option("--train-fraction", ev.split.train_fraction, "Share of the log used for training"),
              ev.split.train_fraction);
  evc->add_option("--batch-size", ev.batch_size, "Frames per forward pass");
  evc->add_option("--manifest", ev.manifest, "Take model, log and split from a train manifest");
  evc->add_option("--out", ev.out, "Directory for evaluation.txt and manifest.txt");

  // gradcheck
  GradOptions gc;
  auto* gcc = app.add_subcommand("gradcheck", "Finite-difference check of every layer op");
  gcc->add_option("--instances", gc.check.instances, "Random instances per op");
  gcc->add_option("--tolerance", gc.check.tolerance, "Maximum relative error");
  gcc->add_option("--seed", gc.check.seed, "Seed for random inputs");
  gcc->add_option("--op", gc.ops, "Restrict to these ops")
      ->check(CLI::IsMember(gradcheck::op_names()));
  gcc->add_option("--inject-fault", gc.faults, "Corrupt an op's backward (dense, conv2d, conv1x1)")
      ->check(CLI::IsMember({"dense", "conv2d", "conv1x1"}));

  // make-toy
  ToyOptions toy;
  auto* mt = app.add_subcommand("make-toy", "Write a synthetic road dataset");
  mt->add_option("--out", toy.out, "Output directory")->required();
  mt->add_option("--count", toy.count, "Number of frames");
  mt->add_option("--seed", toy.seed, "Seed for angles and textures");
  mt->add_option("--max-angle", toy.max_angle, "Largest |steering angle| in degrees");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*report) {
      const auto rows = param_rows();
      const std::string csv = params_csv(rows);
      if (!params_out.empty()) {
        fs::create_directories(params_out);
        write_text(fs::path(params_out) / "params.csv", csv);
        write_text(fs::path(params_out) / "manifest.txt",
                   base_manifest("report-params").to_string());
      }
      if (params_csv_path == "-") std::cout << csv;
      else {
        if (!params_csv_path.empty()) write_text(params_csv_path, csv);
        std::cout << params_table(rows);
      }
      return kExitOk;
    }
    if (*tr) return run_train(train, train_bind);
    if (*evc) return run_evaluate(ev, ev_bind);
    if (*gcc) return run_gradcheck(gc);
    if (*mt) return run_make_toy(toy);
  } catch (const DivergenceError& e) {
    std::cerr << "error: " << e.what() << " (epoch " << e.epoch() << ", batch " << e.batch()
              << ")\n";
    return kExitNumeric;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code(e);
  } catch (const fs::filesystem_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  }
  return kExitUsage;
}
