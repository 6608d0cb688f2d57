/* Copyright 2026 The vitslim Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "vitslim/data.hpp"
#include "vitslim/metrics.hpp"
#include "vitslim/model_config.hpp"
#include "vitslim/param_set.hpp"
#include "vitslim/rng.hpp"
#include "vitslim/vit.hpp"

namespace vitslim {

struct TrainConfig {
  std::size_t epochs = 300;
  std::size_t warmup_epochs = 5;
  double base_lr = 1e-3;
  double min_lr = 1e-5;
  std::size_t batch_size = 1024;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  double weight_decay = 0.05;
  double mixup_alpha = 0.8;
  double cutmix_alpha = 1.0;
  double mix_switch_prob = 0.5;
  double drop_path = 0.1;  // overrides the model config's rate during training
  double ema_decay = 0.9998;
  bool augment = true;
  bool log_timing = true;  // false writes 0 into epoch_seconds for byte-stable CSVs
  std::vector<std::uint64_t> seeds = {42, 123};
};

// Throws ConfigError on out-of-range fields.
void validate(const TrainConfig& config);

// Desk-scale protocol for the tiny model on synthetic data: 30 epochs, batch
// 64, 3 warmup epochs, EMA 0.99, no mixing, augmentation or drop path.
TrainConfig smoke_train_config();

struct MixConfig {
  double mixup_alpha = 0.8;
  double cutmix_alpha = 1.0;
  double switch_prob = 0.5;  // probability of CutMix when both are enabled
};

// Half-open pixel box [y0, y1) x [x0, x1).
struct Box {
  std::size_t y0 = 0, y1 = 0, x0 = 0, x1 = 0;
  std::size_t area() const { return (y1 - y0) * (x1 - x0); }
};

// CutMix box of side sqrt(1 - lam) * extent centred at (cy, cx), clipped to
// the image.
Box cutmix_box(double lam, std::size_t height, std::size_t width, std::size_t cy, std::size_t cx);

// MixUp or CutMix with the reversed batch as partner (sample i pairs with
// B - 1 - i). MixUp: x <- lam x_i + (1 - lam) x_j with lam ~ Beta(a, a).
// CutMix pastes a box of area fraction ~(1 - lam) from x_j and recomputes
// lam from the clipped box. Batches of one and disabled alphas pass through
// with hard labels.
template <Scalar T>
Batch<T> mix_batch(const Batch<T>& batch, Rng& rng, const MixConfig& config);

struct EpochRecord {
  std::size_t epoch = 0;  // 1-indexed
  double train_loss = 0.0;
  double val_top1 = 0.0;
  double val_top5 = 0.0;
  double ema_val_top1 = 0.0;
  double lr = 0.0;        // at the last step of the epoch
  double epoch_seconds = 0.0;

  // Equality over everything except wall-clock time.
  bool same_values(const EpochRecord& o) const;
};

struct RunMetrics {
  std::uint64_t seed = 0;
  std::vector<EpochRecord> epochs;
  // Stability on the EMA validation curve.
  StabilityMetrics ema;
  // Stability on the raw-weight validation curve.
  StabilityMetrics raw;
  double best_ema_top1 = 0.0;     // checkpoint selection metric
  double final_train_top1 = 0.0;  // raw weights, eval mode, un-augmented
  double throughput = 0.0;        // training images per second

  std::vector<double> ema_curve() const;
  std::vector<double> raw_curve() const;
  // Flat metric map used for seed aggregation.
  std::map<std::string, double> summary() const;
  bool same_values(const RunMetrics& o) const;
};

struct EvalResult {
  double top1 = 0.0;
  double top5 = 0.0;
  double loss = 0.0;
};

// Builds a normalized [B, C, H, W] batch from dataset rows. When `augment`
// is set, row i is augmented with the stream (seed, epoch, index).
Batch<float> make_batch(const Dataset& data, std::span<const std::size_t> indices,
                        const NormStats& norm, bool augment, std::uint64_t seed, std::size_t epoch);

EvalResult evaluate(const ParamSet<float>& params, const ModelConfig& config, const Dataset& data,
                    const NormStats& norm, std::size_t batch_size = 128);

struct TrainOptions {
  // When set: metrics.csv, manifest.json, run_summary.json and the
  // best_ema.vslm / final.vslm checkpoints are written here.
  std::optional<std::filesystem::path> out_dir;
  std::function<void(const EpochRecord&)> on_epoch;
  // Stops after this many epochs without changing the schedule, so the
  // records are a prefix of the full run's.
  std::optional<std::size_t> stop_after_epochs;
  // Test hook: called after each optimizer step with the step index.
  std::function<void(std::size_t, const ParamSet<float>&)> on_step;
};

struct RunResult {
  RunMetrics metrics;
  ParamSet<float> final_params;
  ParamSet<float> best_ema;
  NormStats norm;
};

// Full loop: AdamW with warmup + cosine schedule, MixUp/CutMix, drop path,
// EMA, per-epoch validation of raw and EMA weights. Deterministic in `seed`.
// Throws TrainingDiverged when the loss or gradient norm stops being finite.
RunResult train(const ModelConfig& model, const TrainConfig& config, const Dataset& train_set,
                const Dataset& val_set, std::uint64_t seed, const TrainOptions& options = {});

inline constexpr const char* kMetricsCsvHeader =
    "epoch,train_loss,val_top1,val_top5,ema_val_top1,lr,epoch_seconds";
std::string format_epoch_csv_row(const EpochRecord& r);
std::vector<EpochRecord> read_metrics_csv(const std::filesystem::path& path);

// "blob <len>\0<content>" SHA-1, hex encoded.
std::string git_blob_hash(const std::string& content);

}  // namespace vitslim
