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

#include "vitslim/init.hpp"

#include <algorithm>
#include <cmath>

#include "vitslim/error.hpp"
#include "vitslim/rng.hpp"

namespace vitslim {

void InitSpec::validate() const {
  if (!(weight_std > 0.0) || !(embed_std > 0.0)) throw ConfigError("init std must be positive");
  if (!(truncation > 0.0)) throw ConfigError("init truncation must be positive");
}

namespace {

double trunc_normal(Rng& rng, double std, double bound) {
  for (;;) {
    const double z = standard_normal(rng);
    if (std::abs(z) <= bound) return std * z;
  }
}

template <Scalar T>
Tensor<T> trunc_normal_tensor(Shape shape, Rng& rng, double std, double bound) {
  Tensor<T> t(std::move(shape));
  for (T& v : t.data()) v = static_cast<T>(trunc_normal(rng, std, bound));
  return t;
}

template <Scalar T>
void require_full_unshared(const ParamSet<T>& params, const char* op) {
  if (params.layout() != ParamLayout::kFull) {
    throw ContractError(std::string(op) + ": parameters were already transformed");
  }
  const auto& map = params.sharing_map();
  for (std::size_t b = 0; b < map.size(); ++b) {
    if (map[b] != b) throw ContractError(std::string(op) + ": parameters are already shared");
  }
}

// Parses "mlps.<s>.<part>" into (s, part suffix). Returns false otherwise.
bool split_mlp_path(const std::string& path, std::size_t& storage, std::string& leaf) {
  if (!path.starts_with("mlps.")) return false;
  const auto dot = path.find('.', 5);
  storage = std::stoul(path.substr(5, dot - 5));
  leaf = path.substr(dot + 1);
  return true;
}

}  // namespace

template <Scalar T>
ParamSet<T> base_init(const ModelConfig& config, std::uint64_t seed, const InitSpec& spec) {
  validate(config);
  spec.validate();
  const std::size_t d = config.embed_dim, h = config.mlp_hidden, p = config.patch_size;
  const double bound = spec.truncation;
  Rng rng = make_rng(seed, Stream::kInit);
  auto bias = [&](std::size_t n) { return Tensor<T>::full(Shape{n}, static_cast<T>(spec.bias_fill)); };
  auto ones = [](std::size_t n) { return Tensor<T>::full(Shape{n}, T{1}); };

  ParamSet<T> ps;
  ps.insert("patch_embed.weight",
            trunc_normal_tensor<T>(Shape{d, config.in_channels, p, p}, rng, spec.weight_std, bound));
  ps.insert("patch_embed.bias", bias(d));
  ps.insert("cls_token", trunc_normal_tensor<T>(Shape{1, 1, d}, rng, spec.embed_std, bound));
  ps.insert("pos_embed", trunc_normal_tensor<T>(Shape{1, config.tokens(), d}, rng, spec.embed_std, bound));
  for (std::size_t b = 0; b < config.depth; ++b) {
    ps.insert(block_path(b, "norm1.weight"), ones(d));
    ps.insert(block_path(b, "norm1.bias"), Tensor<T>(Shape{d}));
    ps.insert(block_path(b, "attn.qkv.weight"), trunc_normal_tensor<T>(Shape{3 * d, d}, rng, spec.weight_std, bound));
    ps.insert(block_path(b, "attn.qkv.bias"), bias(3 * d));
    ps.insert(block_path(b, "attn.proj.weight"), trunc_normal_tensor<T>(Shape{d, d}, rng, spec.weight_std, bound));
    ps.insert(block_path(b, "attn.proj.bias"), bias(d));
    ps.insert(block_path(b, "norm2.weight"), ones(d));
    ps.insert(block_path(b, "norm2.bias"), Tensor<T>(Shape{d}));
    ps.insert(mlp_storage_path(b, MlpPart::kFc1Weight), trunc_normal_tensor<T>(Shape{h, d}, rng, spec.weight_std, bound));
    ps.insert(mlp_storage_path(b, MlpPart::kFc1Bias), bias(h));
    ps.insert(mlp_storage_path(b, MlpPart::kFc2Weight), trunc_normal_tensor<T>(Shape{d, h}, rng, spec.weight_std, bound));
    ps.insert(mlp_storage_path(b, MlpPart::kFc2Bias), bias(d));
  }
  ps.insert("norm.weight", ones(d));
  ps.insert("norm.bias", Tensor<T>(Shape{d}));
  if (spec.zero_head) {
    ps.insert("head.weight", Tensor<T>(Shape{config.num_classes, d}));
  } else {
    ps.insert("head.weight", trunc_normal_tensor<T>(Shape{config.num_classes, d}, rng, spec.weight_std, bound));
  }
  ps.insert("head.bias", Tensor<T>(Shape{config.num_classes}));

  std::vector<std::size_t> identity(config.depth);
  for (std::size_t b = 0; b < config.depth; ++b) identity[b] = b;
  ps.set_sharing_map(std::move(identity));
  ps.set_layout(ParamLayout::kFull);
  return ps;
}

template <Scalar T>
ParamSet<T> apply_grouped_sharing(const ParamSet<T>& params, std::size_t group_size) {
  const std::size_t depth = params.depth();
  if (group_size == 0 || depth % group_size != 0) {
    throw ConfigError("grouped sharing: depth " + std::to_string(depth) +
                      " not divisible by group_size " + std::to_string(group_size));
  }
  require_full_unshared(params, "apply_grouped_sharing");
  const T factor = static_cast<T>(kSharedMlpScale);
  ParamSet<T> out;
  for (const auto& e : params.entries()) {
    std::size_t storage = 0;
    std::string leaf;
    if (!split_mlp_path(e.path, storage, leaf)) {
      out.insert(e.path, e.tensor.clone());
      continue;
    }
    if (storage % group_size != 0) continue;  // non-leading members are dropped
    Tensor<T> t = e.tensor.clone();
    if (leaf != mlp_part_name(MlpPart::kFc2Bias)) {
      for (T& v : t.data()) v *= factor;
    }
    out.insert("mlps." + std::to_string(storage / group_size) + "." + leaf, std::move(t));
  }
  std::vector<std::size_t> map(depth);
  for (std::size_t b = 0; b < depth; ++b) map[b] = b / group_size;
  out.set_sharing_map(std::move(map));
  out.set_layout(ParamLayout::kGrouped);
  return out;
}

template <Scalar T>
ParamSet<T> slice_shallow(const ParamSet<T>& params, Ratio width_ratio) {
  require_full_unshared(params, "slice_shallow");
  if (width_ratio.den == 0 || width_ratio.num == 0 || width_ratio.num > width_ratio.den) {
    throw ConfigError("slice_shallow: width_ratio must lie in (0, 1]");
  }
  ParamSet<T> out;
  for (const auto& e : params.entries()) {
    std::size_t storage = 0;
    std::string leaf;
    if (!split_mlp_path(e.path, storage, leaf) || leaf == mlp_part_name(MlpPart::kFc2Bias)) {
      out.insert(e.path, e.tensor.clone());
      continue;
    }
    const Shape& s = e.tensor.shape();
    const std::size_t hidden = (leaf == mlp_part_name(MlpPart::kFc2Weight)) ? s[1] : s[0];
    if ((hidden * width_ratio.num) % width_ratio.den != 0) {
      throw ConfigError("slice_shallow: width_ratio " + to_string(width_ratio) + " of hidden " +
                        std::to_string(hidden) + " is not an integer width");
    }
    const std::size_t kept = hidden * width_ratio.num / width_ratio.den;
    auto src = e.tensor.data();
    if (leaf == mlp_part_name(MlpPart::kFc1Weight)) {
      const std::size_t d = s[1];
      out.insert(e.path, Tensor<T>(Shape{kept, d}, std::vector<T>(src.begin(), src.begin() + static_cast<std::ptrdiff_t>(kept * d))));
    } else if (leaf == mlp_part_name(MlpPart::kFc1Bias)) {
      out.insert(e.path, Tensor<T>(Shape{kept}, std::vector<T>(src.begin(), src.begin() + static_cast<std::ptrdiff_t>(kept))));
    } else {
      const std::size_t d = s[0];
      std::vector<T> v(d * kept);
      for (std::size_t r = 0; r < d; ++r) {
        std::copy_n(src.begin() + static_cast<std::ptrdiff_t>(r * hidden), kept,
                    v.begin() + static_cast<std::ptrdiff_t>(r * kept));
      }
      out.insert(e.path, Tensor<T>(Shape{d, kept}, std::move(v)));
    }
  }
  out.set_sharing_map(params.sharing_map());
  out.set_layout(ParamLayout::kShallow);
  return out;
}

template <Scalar T>
ParamSet<T> init_model(const ModelConfig& config, std::uint64_t seed, const InitSpec& spec) {
  ParamSet<T> base = base_init<T>(config, seed, spec);
  if (const auto* g = std::get_if<Grouped>(&config.variant)) {
    return apply_grouped_sharing(base, g->group_size);
  }
  if (const auto* s = std::get_if<Shallow>(&config.variant)) {
    return slice_shallow(base, s->width_ratio);
  }
  return base;
}

#define VITSLIM_INSTANTIATE_INIT(T)                                                      \
  template ParamSet<T> base_init<T>(const ModelConfig&, std::uint64_t, const InitSpec&);  \
  template ParamSet<T> apply_grouped_sharing(const ParamSet<T>&, std::size_t);            \
  template ParamSet<T> slice_shallow(const ParamSet<T>&, Ratio);                          \
  template ParamSet<T> init_model<T>(const ModelConfig&, std::uint64_t, const InitSpec&);

VITSLIM_INSTANTIATE_INIT(float)
VITSLIM_INSTANTIATE_INIT(double)

}  // namespace vitslim
