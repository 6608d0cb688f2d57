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

#include "vitslim/model_config.hpp"

#include <charconv>
#include <cmath>
#include <numeric>

#include "vitslim/error.hpp"

namespace vitslim {

Ratio parse_ratio(const std::string& text) {
  auto parse_u32 = [&](std::string_view s) {
    std::uint32_t v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size()) {
      throw ConfigError("invalid ratio '" + text + "'");
    }
    return v;
  };
  Ratio r;
  if (auto slash = text.find('/'); slash != std::string::npos) {
    r = Ratio{parse_u32(std::string_view(text).substr(0, slash)),
              parse_u32(std::string_view(text).substr(slash + 1))};
  } else if (text.find('.') != std::string::npos) {
    double v = 0;
    try {
      v = std::stod(text);
    } catch (const std::exception&) {
      throw ConfigError("invalid ratio '" + text + "'");
    }
    // Decimal ratios are accepted up to 1/1000 resolution.
    const auto num = static_cast<std::uint32_t>(std::lround(v * 1000.0));
    if (std::abs(num / 1000.0 - v) > 1e-12) throw ConfigError("ratio '" + text + "' is not a multiple of 1/1000");
    r = Ratio{num, 1000};
  } else {
    r = Ratio{parse_u32(text), 1};
  }
  if (r.den == 0) throw ConfigError("ratio '" + text + "' has zero denominator");
  const std::uint32_t g = std::gcd(r.num, r.den);
  if (g > 0) r = Ratio{r.num / g, r.den / g};
  return r;
}

std::string to_string(const Ratio& r) {
  return r.den == 1 ? std::to_string(r.num) : std::to_string(r.num) + "/" + std::to_string(r.den);
}

std::string variant_name(const MLPVariant& v) {
  switch (v.index()) {
    case 0: return "baseline";
    case 1: return "grouped";
    default: return "shallow";
  }
}

std::string variant_display(const MLPVariant& v) {
  switch (v.index()) {
    case 0: return "Baseline";
    case 1: return "GroupedMLP";
    default: return "ShallowMLP";
  }
}

std::size_t ModelConfig::effective_hidden() const {
  if (const auto* s = std::get_if<Shallow>(&variant)) {
    return mlp_hidden * s->width_ratio.num / s->width_ratio.den;
  }
  return mlp_hidden;
}

std::size_t ModelConfig::unique_mlps() const {
  if (const auto* g = std::get_if<Grouped>(&variant)) return depth / g->group_size;
  return depth;
}

std::vector<std::size_t> ModelConfig::sharing_map() const {
  std::vector<std::size_t> map(depth);
  const std::size_t group = std::holds_alternative<Grouped>(variant)
                                ? std::get<Grouped>(variant).group_size
                                : 1;
  for (std::size_t b = 0; b < depth; ++b) map[b] = b / group;
  return map;
}

void validate(const ModelConfig& c) {
  auto fail = [](const std::string& msg) { throw ConfigError("invalid model config: " + msg); };
  if (c.image_size == 0 || c.patch_size == 0 || c.in_channels == 0 || c.embed_dim == 0 ||
      c.depth == 0 || c.num_heads == 0 || c.mlp_hidden == 0 || c.num_classes == 0) {
    fail("all extents must be positive");
  }
  if (c.image_size % c.patch_size != 0) {
    fail("image_size " + std::to_string(c.image_size) + " not divisible by patch_size " +
         std::to_string(c.patch_size));
  }
  if (c.embed_dim % c.num_heads != 0) {
    fail("embed_dim " + std::to_string(c.embed_dim) + " not divisible by num_heads " +
         std::to_string(c.num_heads));
  }
  if (!(c.drop_path_rate >= 0.0 && c.drop_path_rate < 1.0)) {
    fail("drop_path_rate must lie in [0, 1)");
  }
  if (const auto* g = std::get_if<Grouped>(&c.variant)) {
    if (g->group_size == 0) fail("group_size must be positive");
    if (c.depth % g->group_size != 0) {
      fail("depth " + std::to_string(c.depth) + " not divisible by group_size " +
           std::to_string(g->group_size));
    }
  }
  if (const auto* s = std::get_if<Shallow>(&c.variant)) {
    const Ratio r = s->width_ratio;
    if (r.den == 0 || r.num == 0 || r.num > r.den) fail("width_ratio must lie in (0, 1]");
    if ((c.mlp_hidden * r.num) % r.den != 0) {
      fail("width_ratio " + to_string(r) + " of mlp_hidden " + std::to_string(c.mlp_hidden) +
           " is not an integer width");
    }
  }
}

ModelConfig vit_b16(MLPVariant variant) {
  ModelConfig c;
  c.variant = variant;
  return c;
}

ModelConfig tiny_vit(MLPVariant variant) {
  ModelConfig c;
  c.image_size = 32;
  c.patch_size = 4;
  c.embed_dim = 64;
  c.depth = 4;
  c.num_heads = 4;
  c.mlp_hidden = 256;
  c.num_classes = 10;
  c.variant = variant;
  return c;
}

}  // namespace vitslim
