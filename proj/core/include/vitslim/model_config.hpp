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
#include <string>
#include <variant>
#include <vector>

namespace vitslim {

struct Ratio {
  std::uint32_t num = 1;
  std::uint32_t den = 1;

  double value() const { return static_cast<double>(num) / static_cast<double>(den); }
  friend bool operator==(const Ratio&, const Ratio&) = default;
};

// Parses "1/2", "0.5" or "1". Throws ConfigError.
Ratio parse_ratio(const std::string& text);
std::string to_string(const Ratio& r);

// MLP capacity strategies.
struct Baseline {
  friend bool operator==(const Baseline&, const Baseline&) = default;
};
// Consecutive blocks in groups of `group_size` share one MLP.
struct Grouped {
  std::size_t group_size = 2;
  friend bool operator==(const Grouped&, const Grouped&) = default;
};
// Every block keeps its own MLP at width_ratio of the baseline hidden width.
struct Shallow {
  Ratio width_ratio{1, 2};
  friend bool operator==(const Shallow&, const Shallow&) = default;
};

using MLPVariant = std::variant<Baseline, Grouped, Shallow>;

std::string variant_name(const MLPVariant& v);      // "baseline" | "grouped" | "shallow"
std::string variant_display(const MLPVariant& v);   // "Baseline" | "GroupedMLP" | "ShallowMLP"

struct ModelConfig {
  std::size_t image_size = 224;
  std::size_t patch_size = 16;
  std::size_t in_channels = 3;
  std::size_t embed_dim = 768;
  std::size_t depth = 12;
  std::size_t num_heads = 12;
  std::size_t mlp_hidden = 3072;  // baseline hidden width
  std::size_t num_classes = 1000;
  double drop_path_rate = 0.1;
  MLPVariant variant = Baseline{};

  std::size_t grid() const { return image_size / patch_size; }
  std::size_t num_patches() const { return grid() * grid(); }
  std::size_t tokens() const { return num_patches() + 1; }
  std::size_t head_dim() const { return embed_dim / num_heads; }
  std::size_t patch_dim() const { return in_channels * patch_size * patch_size; }
  // Hidden width actually used by each MLP under the variant.
  std::size_t effective_hidden() const;
  std::size_t unique_mlps() const;
  // block index -> MLP storage index.
  std::vector<std::size_t> sharing_map() const;

  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

// Throws ConfigError naming the first violated invariant.
void validate(const ModelConfig& config);

ModelConfig vit_b16(MLPVariant variant = Baseline{});
// img 32, patch 4, d 64, depth 4, heads 4, hidden 256, 10 classes.
ModelConfig tiny_vit(MLPVariant variant = Baseline{});

}  // namespace vitslim
