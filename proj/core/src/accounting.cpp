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

#include "vitslim/accounting.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <iomanip>
#include <numeric>
#include <sstream>

#include "vitslim/error.hpp"
#include "vitslim/graph.hpp"
#include "vitslim/rng.hpp"
#include "vitslim/vit.hpp"

namespace vitslim {
namespace {

Ratio reduced(std::size_t num, std::size_t den) {
  const std::size_t g = std::gcd(num, den);
  return Ratio{static_cast<std::uint32_t>(num / g), static_cast<std::uint32_t>(den / g)};
}

std::vector<TensorCount> layout_of(const ModelConfig& c) {
  const std::size_t d = c.embed_dim, h = c.effective_hidden(), p = c.patch_size;
  std::vector<TensorCount> rows;
  auto add = [&](std::string path, Shape shape, std::size_t refs = 1) {
    const std::size_t n = numel(shape);
    rows.push_back(TensorCount{std::move(path), std::move(shape), n, refs});
  };
  add("patch_embed.weight", {d, c.in_channels, p, p});
  add("patch_embed.bias", {d});
  add("cls_token", {1, 1, d});
  add("pos_embed", {1, c.tokens(), d});
  const auto map = c.sharing_map();
  const std::size_t group = c.depth / c.unique_mlps();
  for (std::size_t b = 0; b < c.depth; ++b) {
    add(block_path(b, "norm1.weight"), {d});
    add(block_path(b, "norm1.bias"), {d});
    add(block_path(b, "attn.qkv.weight"), {3 * d, d});
    add(block_path(b, "attn.qkv.bias"), {3 * d});
    add(block_path(b, "attn.proj.weight"), {d, d});
    add(block_path(b, "attn.proj.bias"), {d});
    add(block_path(b, "norm2.weight"), {d});
    add(block_path(b, "norm2.bias"), {d});
    if (b % group == 0) {
      const std::size_t s = map[b];
      add(mlp_storage_path(s, MlpPart::kFc1Weight), {h, d}, group);
      add(mlp_storage_path(s, MlpPart::kFc1Bias), {h}, group);
      add(mlp_storage_path(s, MlpPart::kFc2Weight), {d, h}, group);
      add(mlp_storage_path(s, MlpPart::kFc2Bias), {d}, group);
    }
  }
  add("norm.weight", {d});
  add("norm.bias", {d});
  add("head.weight", {c.num_classes, d});
  add("head.bias", {c.num_classes});
  return rows;
}

}  // namespace

double ModelStats::reduction_fraction(const ModelStats& baseline) const {
  return 1.0 - static_cast<double>(total_params) / static_cast<double>(baseline.total_params);
}

ModelStats count_params(const ModelConfig& c) {
  validate(c);
  const std::size_t d = c.embed_dim, h = c.effective_hidden(), p = c.patch_size;
  const std::size_t k = c.num_classes, L = c.depth;
  const std::size_t per_block = 2 * d + (3 * d * d + 3 * d) + (d * d + d) + 2 * d;
  const std::size_t non_mlp = d * c.in_channels * p * p + d  // patch embedding
                              + d + c.tokens() * d            // class token, positions
                              + L * per_block + 2 * d         // blocks, final norm
                              + k * d + k;                    // head
  const std::size_t one_mlp = h * d + h + d * h + d;

  ModelStats s;
  s.model = variant_display(c.variant);
  s.mlp_params = c.unique_mlps() * one_mlp;
  s.total_params = non_mlp + s.mlp_params;
  s.unique_params = s.total_params;
  s.referenced_params = non_mlp + L * one_mlp;
  s.unique_mlp_blocks = c.unique_mlps();
  s.gmacs = count_flops(c);
  s.expansion_ratio = reduced(h, d);
  s.breakdown = layout_of(c);
  return s;
}

template <Scalar T>
ModelStats count_params(const ParamSet<T>& params, const ModelConfig& config) {
  ModelStats s;
  s.model = variant_display(config.variant);
  s.total_params = params.unique_param_count();
  s.unique_params = s.total_params;
  s.referenced_params = params.referenced_param_count();
  s.unique_mlp_blocks = params.unique_mlp_count();
  std::vector<std::size_t> refs_per_storage(params.depth(), 0);
  for (std::size_t storage : params.sharing_map()) {
    if (storage >= refs_per_storage.size()) refs_per_storage.resize(storage + 1, 0);
    ++refs_per_storage[storage];
  }
  for (const auto& e : params.entries()) {
    std::size_t refs = 1;
    if (e.path.starts_with("mlps.")) {
      s.mlp_params += e.tensor.numel();
      const std::size_t storage = std::stoul(e.path.substr(5, e.path.find('.', 5) - 5));
      refs = storage < refs_per_storage.size() ? refs_per_storage[storage] : 0;
    }
    s.breakdown.push_back(TensorCount{e.path, e.tensor.shape(), e.tensor.numel(), refs});
  }

  // MACs from the actual weight shapes: every linear layer costs one MAC per
  // weight per token it is applied to.
  const std::size_t tokens = config.tokens(), patches = config.num_patches();
  std::uint64_t macs = patches * params.at("patch_embed.weight").numel();
  for (std::size_t b = 0; b < params.depth(); ++b) {
    macs += tokens * params.at(block_path(b, "attn.qkv.weight")).numel();
    macs += tokens * params.at(block_path(b, "attn.proj.weight")).numel();
    macs += tokens * params.mlp(b, MlpPart::kFc1Weight).numel();
    macs += tokens * params.mlp(b, MlpPart::kFc2Weight).numel();
  }
  macs += params.at("head.weight").numel();
  s.gmacs = static_cast<double>(macs) / 1e9;

  const Tensor<T> fc1 = params.mlp(0, MlpPart::kFc1Weight);
  s.expansion_ratio = reduced(fc1.extent(0), fc1.extent(1));
  return s;
}

template ModelStats count_params(const ParamSet<float>&, const ModelConfig&);
template ModelStats count_params(const ParamSet<double>&, const ModelConfig&);

MacBreakdown count_macs(const ModelConfig& c, FlopConvention convention) {
  validate(c);
  const std::uint64_t d = c.embed_dim, h = c.effective_hidden(), t = c.tokens(), L = c.depth;
  MacBreakdown m;
  m.patch_embed = c.num_patches() * d * c.patch_dim();
  m.qkv = L * t * d * 3 * d;
  m.attn_proj = L * t * d * d;
  m.mlp = L * t * 2 * d * h;
  m.head = d * c.num_classes;
  if (convention == FlopConvention::kFull) {
    m.attn_scores = L * t * t * d;
    m.attn_values = L * t * t * d;
  }
  return m;
}

double count_flops(const ModelConfig& config, FlopConvention convention) {
  return count_macs(config, convention).gmacs();
}

EfficiencyReport efficiency_ratios(const ModelStats& stats, double top1,
                                   std::optional<double> throughput,
                                   std::optional<double> baseline_throughput) {
  if (!(top1 > 0.0 && top1 <= 100.0)) throw ContractError("top-1 accuracy must lie in (0, 100]");
  if (stats.total_params == 0 || !(stats.gmacs > 0.0)) throw ContractError("empty model stats");
  EfficiencyReport r;
  r.acc_per_mparam = top1 / (static_cast<double>(stats.total_params) / 1e6);
  r.acc_per_gflop = top1 / stats.gmacs;
  if (throughput && baseline_throughput) {
    if (!(*baseline_throughput > 0.0)) throw ContractError("baseline throughput must be positive");
    r.throughput_ratio = *throughput / *baseline_throughput;
  }
  return r;
}

std::uint64_t activation_floats_per_block(const ModelConfig& c) {
  const std::uint64_t t = c.tokens(), d = c.embed_dim, h = c.effective_hidden();
  return t * (8 * d + 2 * h) + 2 * c.num_heads * t * t;
}

MemoryEstimate estimate_memory(const ModelConfig& config, std::size_t batch, bool ema) {
  const std::uint64_t params = count_params(config).total_params;
  constexpr std::uint64_t kBytes = sizeof(float);
  MemoryEstimate m;
  m.param_bytes = params * kBytes;
  m.optimizer_bytes = 2 * params * kBytes;
  m.ema_bytes = ema ? params * kBytes : 0;
  m.activation_bytes = static_cast<std::uint64_t>(batch) * config.depth *
                       activation_floats_per_block(config) * kBytes;
  return m;
}

ThroughputResult measure_throughput(const ParamSet<float>& params, const ModelConfig& config,
                                    std::size_t batch, std::size_t warmup_iters,
                                    std::size_t timed_iters) {
  if (timed_iters < 3) throw MeasurementError("throughput needs at least 3 timed iterations");
  if (batch == 0) throw MeasurementError("throughput batch must be positive");
  Tensor<float> images(Shape{batch, config.in_channels, config.image_size, config.image_size});
  Rng rng = make_rng(0, Stream::kBench);
  for (float& v : images.data()) v = static_cast<float>(standard_normal(rng));

  Graph<float> no_grad(false);
  for (std::size_t i = 0; i < warmup_iters; ++i) forward(no_grad, params, config, images, Mode::kEval);
  ThroughputResult r;
  for (std::size_t i = 0; i < timed_iters; ++i) {
    const auto start = std::chrono::steady_clock::now();
    Tensor<float> logits = forward(no_grad, params, config, images, Mode::kEval);
    const std::chrono::duration<double> dt = std::chrono::steady_clock::now() - start;
    r.samples.push_back(static_cast<double>(batch) / dt.count());
  }
  const double n = static_cast<double>(r.samples.size());
  r.images_per_second = std::accumulate(r.samples.begin(), r.samples.end(), 0.0) / n;
  double ss = 0.0;
  for (double v : r.samples) ss += (v - r.images_per_second) * (v - r.images_per_second);
  r.stddev = std::sqrt(ss / (n - 1.0));
  return r;
}

std::string format_millions(std::size_t count) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(1) << static_cast<double>(count) / 1e6 << "M";
  return os.str();
}

std::string format_giga(double g) {
  std::ostringstream os;
  if (g < 1.0) {
    os << std::fixed << std::setprecision(4) << g;
    return os.str();
  }
  // Round to hundredths first, then tenths: 16.8485 -> 16.85 -> 16.9.
  const long long tenths = (std::llround(g * 100.0) + 5) / 10;
  os << tenths / 10 << "." << tenths % 10;
  return os.str();
}

std::string format_expansion(const Ratio& r) {
  std::ostringstream os;
  if (r.den == 1) {
    os << r.num << "x";
  } else {
    os << std::setprecision(3) << r.value() << "x";
  }
  return os.str();
}

std::string format_stats_table(const std::vector<ModelStats>& rows) {
  const std::vector<std::string> header = {"Model", "Params", "MLP", "Unique", "GFLOPs",
                                           "Expansion", "ParamsExact", "MLPExact", "MACs"};
  std::vector<std::vector<std::string>> cells;
  cells.push_back(header);
  for (const auto& s : rows) {
    std::ostringstream macs;
    macs << std::llround(s.gmacs * 1e9);
    cells.push_back({s.model, format_millions(s.total_params), format_millions(s.mlp_params),
                     std::to_string(s.unique_mlp_blocks), format_giga(s.gmacs),
                     format_expansion(s.expansion_ratio), std::to_string(s.total_params),
                     std::to_string(s.mlp_params), macs.str()});
  }
  std::vector<std::size_t> width(header.size(), 0);
  for (const auto& row : cells) {
    for (std::size_t i = 0; i < row.size(); ++i) width[i] = std::max(width[i], row[i].size());
  }
  std::ostringstream os;
  for (const auto& row : cells) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i == 0) {
        os << std::left << std::setw(static_cast<int>(width[i])) << row[i];
      } else {
        os << "  " << std::right << std::setw(static_cast<int>(width[i])) << row[i];
      }
    }
    os << "\n";
  }
  return os.str();
}

std::string format_stats_csv(const std::vector<ModelStats>& rows) {
  std::ostringstream os;
  os << "model,params,unique_mlp,mlp_params,gmacs,expansion\n";
  for (const auto& s : rows) {
    os << s.model << "," << s.total_params << "," << s.unique_mlp_blocks << "," << s.mlp_params
       << "," << std::setprecision(6) << std::fixed << s.gmacs << std::defaultfloat << ","
       << to_string(s.expansion_ratio) << "\n";
  }
  return os.str();
}

}  // namespace vitslim
