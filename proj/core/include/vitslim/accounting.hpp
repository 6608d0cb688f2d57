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
#include <optional>
#include <string>
#include <vector>

#include "vitslim/model_config.hpp"
#include "vitslim/param_set.hpp"

namespace vitslim {

struct TensorCount {
  std::string path;
  Shape shape;
  std::size_t count = 0;       // scalars in one storage
  std::size_t references = 1;  // blocks reading this storage
  friend bool operator==(const TensorCount&, const TensorCount&) = default;
};

struct ModelStats {
  std::string model;                  // display name, e.g. "GroupedMLP"
  std::size_t total_params = 0;       // scalars across unique storages
  std::size_t referenced_params = 0;  // shared MLPs counted once per block
  std::size_t unique_params = 0;      // equals total_params; kept for symmetry with referenced
  std::size_t mlp_params = 0;         // unique MLP storage only
  std::size_t unique_mlp_blocks = 0;
  double gmacs = 0.0;                 // dense-only convention
  Ratio expansion_ratio{4, 1};        // effective hidden / embed_dim
  std::vector<TensorCount> breakdown;

  // Fraction of `baseline.total_params` removed by this model.
  double reduction_fraction(const ModelStats& baseline) const;
};

// Closed-form counts from the configuration alone.
ModelStats count_params(const ModelConfig& config);

// Counts by walking a built ParamSet (for cross-checking the closed form).
template <Scalar T>
ModelStats count_params(const ParamSet<T>& params, const ModelConfig& config);

// dense_only counts the patch embedding, qkv, attention output projection,
// MLP and head. full also counts the QK^T and attention-value products.
enum class FlopConvention { kDenseOnly, kFull };

struct MacBreakdown {
  std::uint64_t patch_embed = 0;
  std::uint64_t qkv = 0;
  std::uint64_t attn_scores = 0;  // QK^T, full convention only
  std::uint64_t attn_values = 0;  // AV, full convention only
  std::uint64_t attn_proj = 0;
  std::uint64_t mlp = 0;
  std::uint64_t head = 0;

  std::uint64_t total() const {
    return patch_embed + qkv + attn_scores + attn_values + attn_proj + mlp + head;
  }
  double gmacs() const { return static_cast<double>(total()) / 1e9; }
};

// Multiply-accumulates for one image.
MacBreakdown count_macs(const ModelConfig& config, FlopConvention convention = FlopConvention::kDenseOnly);
// Same, in units of 1e9. Reported as "GFLOPs" with 1 MAC = 1 FLOP.
// Giga multiply-accumulates per image, the unit of the published GFLOPs column.
double count_flops(const ModelConfig& config, FlopConvention convention = FlopConvention::kDenseOnly);

struct EfficiencyReport {
  double acc_per_mparam = 0.0;  // top-1 % per million parameters
  double acc_per_gflop = 0.0;   // top-1 % per GMAC
  double throughput_ratio = 1.0;
};

// throughput_ratio = throughput / baseline_throughput when both are given.
EfficiencyReport efficiency_ratios(const ModelStats& stats, double top1,
                                   std::optional<double> throughput = std::nullopt,
                                   std::optional<double> baseline_throughput = std::nullopt);

struct MemoryEstimate {
  std::uint64_t param_bytes = 0;
  std::uint64_t optimizer_bytes = 0;  // AdamW first and second moments
  std::uint64_t ema_bytes = 0;
  std::uint64_t activation_bytes = 0;
  std::uint64_t total() const { return param_bytes + optimizer_bytes + ema_bytes + activation_bytes; }
};

// fp32 training footprint: parameters, two AdamW moments, an optional EMA
// copy, and the activations saved for backward by each block.
MemoryEstimate estimate_memory(const ModelConfig& config, std::size_t batch, bool ema);

// Floats saved for backward per sample and block:
// T * (8d + 2 * hidden) + 2 * heads * T^2.
std::uint64_t activation_floats_per_block(const ModelConfig& config);

struct ThroughputResult {
  double images_per_second = 0.0;  // mean over timed iterations
  double stddev = 0.0;
  std::vector<double> samples;     // per-iteration img/s
};

// Forward-only eval throughput on random inputs. Needs exclusive use of the
// machine for stable numbers. Throws MeasurementError if timed_iters < 3.
ThroughputResult measure_throughput(const ParamSet<float>& params, const ModelConfig& config,
                                    std::size_t batch, std::size_t warmup_iters,
                                    std::size_t timed_iters);

// "86.6M"-style and "16.9"-style display rounding.
std::string format_millions(std::size_t count);
// One decimal via hundredths (16.8485 -> "16.9"); four decimals below 1.
std::string format_giga(double g);
std::string format_expansion(const Ratio& r);  // "4x", "2x", "1.5x"

// Aligned text table for the given rows.
std::string format_stats_table(const std::vector<ModelStats>& rows);
// CSV with header model,params,unique_mlp,mlp_params,gmacs,expansion.
std::string format_stats_csv(const std::vector<ModelStats>& rows);

}  // namespace vitslim
