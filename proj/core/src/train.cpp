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

#include "vitslim/train.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>

#include <openssl/evp.h>

#include "vitslim/checkpoint.hpp"
#include "vitslim/config_json.hpp"
#include "vitslim/error.hpp"
#include "vitslim/ops.hpp"
#include "vitslim/optim.hpp"
#include "vitslim/runtime.hpp"

namespace vitslim {

TrainConfig smoke_train_config() {
  TrainConfig c;
  c.epochs = 30;
  c.warmup_epochs = 3;
  c.batch_size = 64;
  c.mixup_alpha = 0.0;
  c.cutmix_alpha = 0.0;
  c.drop_path = 0.0;
  c.ema_decay = 0.99;
  c.augment = false;
  return c;
}

void validate(const TrainConfig& c) {
  if (c.epochs == 0) throw ConfigError("train.epochs must be positive");
  if (c.warmup_epochs >= c.epochs) {
    throw ConfigError("train.warmup_epochs (" + std::to_string(c.warmup_epochs) +
                      ") must be smaller than train.epochs (" + std::to_string(c.epochs) + ")");
  }
  if (!(c.base_lr > 0.0)) throw ConfigError("train.base_lr must be positive");
  if (!(c.min_lr >= 0.0 && c.min_lr <= c.base_lr)) throw ConfigError("train.min_lr must lie in [0, base_lr]");
  if (c.batch_size == 0) throw ConfigError("train.batch_size must be positive");
  if (!(c.beta1 >= 0.0 && c.beta1 < 1.0) || !(c.beta2 >= 0.0 && c.beta2 < 1.0)) {
    throw ConfigError("train.beta1 and train.beta2 must lie in [0, 1)");
  }
  if (!(c.adam_eps > 0.0)) throw ConfigError("train.adam_eps must be positive");
  if (!(c.weight_decay >= 0.0)) throw ConfigError("train.weight_decay must be non-negative");
  if (!(c.mixup_alpha >= 0.0) || !(c.cutmix_alpha >= 0.0)) throw ConfigError("mixing alphas must be non-negative");
  if (!(c.mix_switch_prob >= 0.0 && c.mix_switch_prob <= 1.0)) {
    throw ConfigError("train.mix_switch_prob must lie in [0, 1]");
  }
  if (!(c.drop_path >= 0.0 && c.drop_path < 1.0)) throw ConfigError("train.drop_path must lie in [0, 1)");
  if (!(c.ema_decay >= 0.0 && c.ema_decay < 1.0)) throw ConfigError("train.ema_decay must lie in [0, 1)");
  if (c.seeds.empty()) throw ConfigError("train.seeds must not be empty");
}

Box cutmix_box(double lam, std::size_t height, std::size_t width, std::size_t cy, std::size_t cx) {
  const double cut = std::sqrt(std::clamp(1.0 - lam, 0.0, 1.0));
  const auto ch = static_cast<long long>(static_cast<double>(height) * cut);
  const auto cw = static_cast<long long>(static_cast<double>(width) * cut);
  auto clip = [](long long v, std::size_t hi) {
    return static_cast<std::size_t>(std::clamp<long long>(v, 0, static_cast<long long>(hi)));
  };
  const auto y = static_cast<long long>(cy), x = static_cast<long long>(cx);
  return Box{clip(y - ch / 2, height), clip(y + ch / 2, height), clip(x - cw / 2, width),
             clip(x + cw / 2, width)};
}

template <Scalar T>
Batch<T> mix_batch(const Batch<T>& batch, Rng& rng, const MixConfig& config) {
  if (config.mixup_alpha < 0.0 || config.cutmix_alpha < 0.0) {
    throw ConfigError("mixing alphas must be non-negative");
  }
  const std::size_t b = batch.size();
  if (b < 2 || (config.mixup_alpha == 0.0 && config.cutmix_alpha == 0.0)) return batch;
  if (batch.images.rank() != 4 || batch.images.extent(0) != b) {
    throw DimensionError("mix_batch expects images [B, C, H, W] matching the labels");
  }
  bool use_cutmix = config.cutmix_alpha > 0.0;
  if (config.mixup_alpha > 0.0 && config.cutmix_alpha > 0.0) {
    use_cutmix = uniform01(rng) < config.switch_prob;
  }
  const double alpha = use_cutmix ? config.cutmix_alpha : config.mixup_alpha;
  double lam = beta_draw(rng, alpha, alpha);

  Batch<T> out;
  out.labels = batch.labels;
  out.mix_labels.resize(b);
  for (std::size_t i = 0; i < b; ++i) out.mix_labels[i] = batch.labels[b - 1 - i];
  out.images = batch.images.clone();

  const std::size_t c = batch.images.extent(1), h = batch.images.extent(2), w = batch.images.extent(3);
  const std::size_t per = c * h * w;
  auto src = batch.images.data();
  auto dst = out.images.data();
  if (use_cutmix) {
    const auto cy = static_cast<std::size_t>(uniform01(rng) * static_cast<double>(h));
    const auto cx = static_cast<std::size_t>(uniform01(rng) * static_cast<double>(w));
    const Box box = cutmix_box(lam, h, w, cy, cx);
    for (std::size_t i = 0; i < b; ++i) {
      const std::size_t j = b - 1 - i;
      for (std::size_t ch = 0; ch < c; ++ch) {
        for (std::size_t y = box.y0; y < box.y1; ++y) {
          for (std::size_t x = box.x0; x < box.x1; ++x) {
            const std::size_t off = ch * h * w + y * w + x;
            dst[i * per + off] = src[j * per + off];
          }
        }
      }
    }
    lam = 1.0 - static_cast<double>(box.area()) / static_cast<double>(h * w);
  } else {
    const T a = static_cast<T>(lam), r = static_cast<T>(1.0 - lam);
    for (std::size_t i = 0; i < b; ++i) {
      const std::size_t j = b - 1 - i;
      for (std::size_t k = 0; k < per; ++k) dst[i * per + k] = a * src[i * per + k] + r * src[j * per + k];
    }
  }
  out.lam = lam;
  return out;
}

template Batch<float> mix_batch(const Batch<float>&, Rng&, const MixConfig&);
template Batch<double> mix_batch(const Batch<double>&, Rng&, const MixConfig&);

bool EpochRecord::same_values(const EpochRecord& o) const {
  return epoch == o.epoch && train_loss == o.train_loss && val_top1 == o.val_top1 &&
         val_top5 == o.val_top5 && ema_val_top1 == o.ema_val_top1 && lr == o.lr;
}

std::vector<double> RunMetrics::ema_curve() const {
  std::vector<double> v;
  for (const auto& e : epochs) v.push_back(e.ema_val_top1);
  return v;
}

std::vector<double> RunMetrics::raw_curve() const {
  std::vector<double> v;
  for (const auto& e : epochs) v.push_back(e.val_top1);
  return v;
}

std::map<std::string, double> RunMetrics::summary() const {
  std::map<std::string, double> m;
  m["best_ema_top1"] = best_ema_top1;
  m["peak_epoch"] = static_cast<double>(ema.peak_epoch);
  m["peak_top1"] = ema.peak;
  m["final_top1"] = ema.final;
  m["peak_to_final_gap"] = ema.gap;
  m["raw_peak_top1"] = raw.peak;
  m["raw_final_top1"] = raw.final;
  m["raw_peak_to_final_gap"] = raw.gap;
  m["final_train_top1"] = final_train_top1;
  if (!epochs.empty()) {
    m["final_val_top5"] = epochs.back().val_top5;
    m["final_train_loss"] = epochs.back().train_loss;
  }
  m["throughput"] = throughput;
  return m;
}

bool RunMetrics::same_values(const RunMetrics& o) const {
  if (seed != o.seed || epochs.size() != o.epochs.size()) return false;
  for (std::size_t i = 0; i < epochs.size(); ++i) {
    if (!epochs[i].same_values(o.epochs[i])) return false;
  }
  return best_ema_top1 == o.best_ema_top1 && final_train_top1 == o.final_train_top1;
}

Batch<float> make_batch(const Dataset& data, std::span<const std::size_t> indices,
                        const NormStats& norm, bool augment_images, std::uint64_t seed,
                        std::size_t epoch) {
  const std::size_t c = data.channels, h = data.height, w = data.width, per = data.image_numel();
  if (norm.mean.size() != c || norm.std.size() != c) {
    throw DimensionError("normalization stats do not match the channel count");
  }
  Batch<float> batch;
  batch.images = Tensor<float>(Shape{indices.size(), c, h, w});
  batch.labels.reserve(indices.size());
  auto dst = batch.images.data();
  for (std::size_t i = 0; i < indices.size(); ++i) {
    const std::size_t idx = indices[i];
    if (idx >= data.size()) throw ContractError("batch index out of range");
    std::vector<float> img;
    if (augment_images) {
      Rng rng = make_rng(seed, Stream::kAugment, {epoch, idx});
      img = augment(data.image(idx), c, h, w, rng, AugmentMode::kTrain);
    } else {
      auto src = data.image(idx);
      img.assign(src.begin(), src.end());
    }
    for (std::size_t ch = 0; ch < c; ++ch) {
      const float m = norm.mean[ch], inv = 1.0f / norm.std[ch];
      for (std::size_t k = 0; k < h * w; ++k) {
        dst[i * per + ch * h * w + k] = (img[ch * h * w + k] - m) * inv;
      }
    }
    batch.labels.push_back(data.labels[idx]);
  }
  return batch;
}

EvalResult evaluate(const ParamSet<float>& params, const ModelConfig& config, const Dataset& data,
                    const NormStats& norm, std::size_t batch_size) {
  if (data.size() == 0) throw ContractError("cannot evaluate on an empty dataset");
  if (batch_size == 0) throw ConfigError("evaluation batch size must be positive");
  const std::size_t classes = config.num_classes;
  const std::size_t k = std::min<std::size_t>(5, classes);
  std::size_t hit1 = 0, hit5 = 0;
  double loss_sum = 0.0;
  std::vector<std::size_t> idx;
  for (std::size_t start = 0; start < data.size(); start += batch_size) {
    const std::size_t end = std::min(data.size(), start + batch_size);
    idx.resize(end - start);
    std::iota(idx.begin(), idx.end(), start);
    Batch<float> batch = make_batch(data, idx, norm, false, 0, 0);
    Graph<float> g(false);
    Tensor<float> logits = forward(g, params, config, batch.images, Mode::kEval);
    Tensor<float> loss = ops::soft_cross_entropy(g, logits, soft_targets(batch, classes));
    loss_sum += static_cast<double>(loss.item()) * static_cast<double>(idx.size());
    auto z = logits.data();
    for (std::size_t i = 0; i < idx.size(); ++i) {
      const std::uint32_t y = batch.labels[i];
      const float target = z[i * classes + y];
      // Rank of the true class; ties resolved in favour of the lower index.
      std::size_t above = 0;
      for (std::size_t c = 0; c < classes; ++c) {
        const float v = z[i * classes + c];
        if (v > target || (v == target && c < y)) ++above;
      }
      if (above == 0) ++hit1;
      if (above < k) ++hit5;
    }
  }
  const double n = static_cast<double>(data.size());
  return EvalResult{100.0 * static_cast<double>(hit1) / n, 100.0 * static_cast<double>(hit5) / n,
                    loss_sum / n};
}

namespace {

void check_dataset(const Dataset& data, const ModelConfig& config, const char* name) {
  if (data.size() == 0) throw ContractError(std::string(name) + " set is empty");
  if (data.channels != config.in_channels || data.height != config.image_size ||
      data.width != config.image_size) {
    throw ConfigError(std::string(name) + " images are " + std::to_string(data.channels) + "x" +
                      std::to_string(data.height) + "x" + std::to_string(data.width) +
                      " but the model expects " + std::to_string(config.in_channels) + "x" +
                      std::to_string(config.image_size) + "x" + std::to_string(config.image_size));
  }
  if (data.num_classes != config.num_classes) {
    throw ConfigError(std::string(name) + " set has " + std::to_string(data.num_classes) +
                      " classes but the model has " + std::to_string(config.num_classes));
  }
}

// Fisher-Yates on uniform01 so the order does not depend on the standard
// library's shuffle.
std::vector<std::size_t> epoch_order(std::size_t n, std::uint64_t seed, std::size_t epoch) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  Rng rng = make_rng(seed, Stream::kDataOrder, {epoch});
  for (std::size_t i = n; i > 1; --i) {
    const auto j = static_cast<std::size_t>(uniform01(rng) * static_cast<double>(i));
    std::swap(order[i - 1], order[std::min(j, i - 1)]);
  }
  return order;
}

double grad_norm(const ParamSet<float>& params) {
  double ss = 0.0;
  for (const auto& e : params.entries()) {
    if (!e.tensor.has_grad()) continue;
    for (float g : e.tensor.grad()) ss += static_cast<double>(g) * static_cast<double>(g);
  }
  return std::sqrt(ss);
}

nlohmann::json manifest_json(const ModelConfig& model, const TrainConfig& config, std::uint64_t seed,
                             const NormStats& norm) {
  nlohmann::json cfg;
  cfg["model"] = model_config_to_json(model);
  cfg["train"] = train_config_to_json(config);
  nlohmann::json m;
  m["config"] = cfg;
  m["config_hash"] = git_blob_hash(cfg.dump());
  m["seed"] = seed;
  m["norm"] = {{"mean", norm.mean}, {"std", norm.std}};
  return m;
}

}  // namespace

RunResult train(const ModelConfig& model, const TrainConfig& config, const Dataset& train_set,
                const Dataset& val_set, std::uint64_t seed, const TrainOptions& options) {
  validate(model);
  validate(config);
  tune_allocator();
  check_dataset(train_set, model, "training");
  check_dataset(val_set, model, "validation");

  ModelConfig mc = model;
  mc.drop_path_rate = config.drop_path;
  const std::size_t classes = mc.num_classes;

  RunResult result;
  result.norm = compute_norm_stats(train_set);
  ParamSet<float> params = build_model<float>(mc, seed).params;
  params.set_requires_grad(true);
  AdamW<float> opt(params, AdamWConfig{config.beta1, config.beta2, config.adam_eps, config.weight_decay});
  Ema<float> ema(params, config.ema_decay);
  const MixConfig mix{config.mixup_alpha, config.cutmix_alpha, config.mix_switch_prob};

  const std::size_t n = train_set.size();
  const std::size_t steps_per_epoch = (n + config.batch_size - 1) / config.batch_size;
  const std::size_t total_steps = config.epochs * steps_per_epoch;
  const std::size_t warmup_steps = config.warmup_epochs * steps_per_epoch;

  std::ofstream csv;
  if (options.out_dir) {
    std::filesystem::create_directories(*options.out_dir);
    csv.open(*options.out_dir / "metrics.csv");
    if (!csv) throw Error("cannot write " + (*options.out_dir / "metrics.csv").string());
    csv << kMetricsCsvHeader << '\n';
    std::ofstream mf(*options.out_dir / "manifest.json");
    mf << manifest_json(model, config, seed, result.norm).dump(2) << '\n';
  }

  RunMetrics& metrics = result.metrics;
  metrics.seed = seed;
  double best = -1.0;
  double train_seconds = 0.0;
  std::size_t step = 0;
  std::vector<std::size_t> idx;
  const std::size_t last_epoch =
      options.stop_after_epochs ? std::min(*options.stop_after_epochs, config.epochs) : config.epochs;
  for (std::size_t epoch = 1; epoch <= last_epoch; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    const std::vector<std::size_t> order = epoch_order(n, seed, epoch);
    double loss_sum = 0.0;
    double lr = 0.0;
    for (std::size_t start = 0; start < n; start += config.batch_size) {
      const std::size_t end = std::min(n, start + config.batch_size);
      idx.assign(order.begin() + static_cast<std::ptrdiff_t>(start),
                 order.begin() + static_cast<std::ptrdiff_t>(end));
      Batch<float> batch = make_batch(train_set, idx, result.norm, config.augment, seed, epoch);
      Rng mix_rng = make_rng(seed, Stream::kMixup, {step});
      batch = mix_batch(batch, mix_rng, mix);
      lr = cosine_lr(step + 1, total_steps, warmup_steps, config.base_lr, config.min_lr);

      Graph<float> g;
      Rng drop_rng = make_rng(seed, Stream::kDropPath, {step});
      Tensor<float> logits = forward(g, params, mc, batch.images, Mode::kTrain, &drop_rng);
      Tensor<float> loss = ops::soft_cross_entropy(g, logits, soft_targets(batch, classes));
      params.zero_grad();
      g.backward(loss);
      const double loss_value = loss.item();
      const double gn = grad_norm(params);
      if (!std::isfinite(loss_value) || !std::isfinite(gn)) throw TrainingDiverged(step, lr, gn, loss_value);
      opt.step(params, lr);
      ema.update(params);
      loss_sum += loss_value * static_cast<double>(idx.size());
      if (options.on_step) options.on_step(step, params);
      ++step;
    }
    const double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    train_seconds += seconds;

    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = loss_sum / static_cast<double>(n);
    const EvalResult raw = evaluate(params, mc, val_set, result.norm);
    const EvalResult smooth = evaluate(ema.shadow(), mc, val_set, result.norm);
    rec.val_top1 = raw.top1;
    rec.val_top5 = raw.top5;
    rec.ema_val_top1 = smooth.top1;
    rec.lr = lr;
    rec.epoch_seconds = config.log_timing ? seconds : 0.0;
    if (smooth.top1 > best) {
      best = smooth.top1;
      result.best_ema = ema.shadow().clone();
    }
    metrics.epochs.push_back(rec);
    if (csv.is_open()) csv << format_epoch_csv_row(rec) << '\n' << std::flush;
    if (options.on_epoch) options.on_epoch(rec);
  }

  metrics.ema = stability_metrics(metrics.ema_curve());
  metrics.raw = stability_metrics(metrics.raw_curve());
  metrics.best_ema_top1 = best;
  metrics.final_train_top1 = evaluate(params, mc, train_set, result.norm).top1;
  metrics.throughput = train_seconds > 0.0
                           ? static_cast<double>(n * last_epoch) / train_seconds
                           : 0.0;
  params.clear_grad();
  params.set_requires_grad(false);
  result.final_params = std::move(params);
  if (options.out_dir) {
    save_checkpoint(*options.out_dir / "best_ema.vslm", model, result.best_ema);
    save_checkpoint(*options.out_dir / "final.vslm", model, result.final_params);
    std::ofstream sf(*options.out_dir / "run_summary.json");
    nlohmann::json summary = metrics.summary();
    summary["seed"] = seed;
    sf << summary.dump(2) << '\n';
  }
  return result;
}

std::string format_epoch_csv_row(const EpochRecord& r) {
  char buf[256];
  std::snprintf(buf, sizeof buf, "%zu,%.9g,%.4f,%.4f,%.4f,%.9g,%.3f", r.epoch, r.train_loss,
                r.val_top1, r.val_top5, r.ema_val_top1, r.lr, r.epoch_seconds);
  return buf;
}

std::vector<EpochRecord> read_metrics_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line) || line != kMetricsCsvHeader) {
    throw FormatError(path.string() + ": unexpected header", 0);
  }
  std::vector<EpochRecord> rows;
  std::uint64_t offset = line.size() + 1;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    EpochRecord r;
    std::istringstream ss(line);
    std::string cell;
    std::vector<std::string> cells;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (cells.size() != 7) throw FormatError(path.string() + ": expected 7 columns", offset);
    try {
      r.epoch = std::stoul(cells[0]);
      r.train_loss = std::stod(cells[1]);
      r.val_top1 = std::stod(cells[2]);
      r.val_top5 = std::stod(cells[3]);
      r.ema_val_top1 = std::stod(cells[4]);
      r.lr = std::stod(cells[5]);
      r.epoch_seconds = std::stod(cells[6]);
    } catch (const std::logic_error&) {
      throw FormatError(path.string() + ": malformed number", offset);
    }
    rows.push_back(r);
    offset += line.size() + 1;
  }
  return rows;
}

std::string git_blob_hash(const std::string& content) {
  const std::string blob = "blob " + std::to_string(content.size()) + std::string(1, '\0') + content;
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(blob.data(), blob.size(), md, &len, EVP_sha1(), nullptr) != 1) {
    throw Error("SHA-1 digest failed");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(kHex[md[i] >> 4]);
    out.push_back(kHex[md[i] & 15]);
  }
  return out;
}

}  // namespace vitslim
