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

#include "vitslim/vit.hpp"

#include <array>
#include <cmath>

#include "vitslim/ops.hpp"

namespace vitslim {

template <Scalar T>
Tensor<T> soft_targets(const Batch<T>& batch, std::size_t num_classes) {
  const std::size_t b = batch.size();
  Tensor<T> t(Shape{b, num_classes});
  const T lam = static_cast<T>(batch.mixed() ? batch.lam : 1.0);
  for (std::size_t i = 0; i < b; ++i) {
    if (batch.labels[i] >= num_classes) {
      throw ContractError("label " + std::to_string(batch.labels[i]) + " out of range");
    }
    t[i * num_classes + batch.labels[i]] += lam;
    if (batch.mixed()) t[i * num_classes + batch.mix_labels[i]] += T(1) - lam;
  }
  return t;
}

template <Scalar T>
BuiltModel<T> build_model(const ModelConfig& config, std::uint64_t seed, const InitSpec& spec) {
  validate(config);
  BuiltModel<T> m{init_model<T>(config, seed, spec), {}};
  m.stats = count_params(m.params, config);
  return m;
}

template <Scalar T>
Tensor<T> drop_path(Graph<T>& g, const Tensor<T>& x, double rate, Mode mode, Rng* rng) {
  if (!(rate >= 0.0 && rate < 1.0)) throw ConfigError("drop_path rate must lie in [0, 1)");
  if (mode == Mode::kEval || rate == 0.0) return x;
  if (rng == nullptr) throw ContractError("drop_path in train mode needs an rng");
  const double keep = 1.0 - rate;
  std::vector<T> factors(x.extent(0));
  for (T& f : factors) f = uniform01(*rng) < keep ? static_cast<T>(1.0 / keep) : T(0);
  return ops::scale_samples(g, x, std::span<const T>(factors));
}

template <Scalar T>
Tensor<T> mlp_forward(Graph<T>& g, const Tensor<T>& x, const Tensor<T>& fc1_weight,
                      const Tensor<T>& fc1_bias, const Tensor<T>& fc2_weight,
                      const Tensor<T>& fc2_bias) {
  const std::size_t d = x.extent(x.rank() - 1);
  if (fc1_weight.rank() != 2 || fc2_weight.rank() != 2 || fc1_weight.extent(1) != d ||
      fc2_weight.extent(0) != d || fc2_weight.extent(1) != fc1_weight.extent(0)) {
    throw DimensionError("mlp: fc1 " + shape_string(fc1_weight.shape()) + " / fc2 " +
                         shape_string(fc2_weight.shape()) + " incompatible with width " +
                         std::to_string(d));
  }
  Tensor<T> hidden = ops::gelu(g, ops::linear(g, x, fc1_weight, fc1_bias));
  return ops::linear(g, hidden, fc2_weight, fc2_bias);
}

template <Scalar T>
Tensor<T> attention(Graph<T>& g, const Tensor<T>& x, const Tensor<T>& qkv_weight,
                    const Tensor<T>& qkv_bias, const Tensor<T>& proj_weight,
                    const Tensor<T>& proj_bias, std::size_t num_heads) {
  if (x.rank() != 3) throw DimensionError("attention expects [B, T, d], got " + shape_string(x.shape()));
  const std::size_t b = x.extent(0), t = x.extent(1), d = x.extent(2);
  if (num_heads == 0 || d % num_heads != 0) {
    throw ConfigError("attention: width " + std::to_string(d) + " not divisible by " +
                      std::to_string(num_heads) + " heads");
  }
  const std::size_t hd = d / num_heads;
  Tensor<T> qkv = ops::linear(g, x, qkv_weight, qkv_bias);
  qkv = ops::reshape(g, qkv, Shape{b, t, 3, num_heads, hd});
  constexpr std::array<std::size_t, 5> kSplit = {2, 0, 3, 1, 4};  // [3, B, H, T, hd]
  qkv = ops::permute(g, qkv, std::span<const std::size_t>(kSplit));
  auto head_view = [&](std::size_t which) {
    return ops::reshape(g, ops::select(g, qkv, 0, which), Shape{b * num_heads, t, hd});
  };
  Tensor<T> q = head_view(0), k = head_view(1), v = head_view(2);
  Tensor<T> scores = ops::scale(g, ops::batched_matmul(g, q, k, /*transpose_b=*/true),
                                static_cast<T>(1.0 / std::sqrt(static_cast<double>(hd))));
  Tensor<T> weights = ops::softmax(g, scores);
  Tensor<T> ctx = ops::batched_matmul(g, weights, v);  // [B*H, T, hd]
  ctx = ops::reshape(g, ctx, Shape{b, num_heads, t, hd});
  constexpr std::array<std::size_t, 4> kMerge = {0, 2, 1, 3};  // [B, T, H, hd]
  ctx = ops::reshape(g, ops::permute(g, ctx, std::span<const std::size_t>(kMerge)), Shape{b, t, d});
  return ops::linear(g, ctx, proj_weight, proj_bias);
}

template <Scalar T>
Tensor<T> forward(Graph<T>& g, const ParamSet<T>& params, const ModelConfig& config,
                  const Tensor<T>& images, Mode mode, Rng* rng, ActivationProbe<T>* probe) {
  const std::size_t c = config.in_channels, s = config.image_size, p = config.patch_size;
  if (images.rank() != 4 || images.extent(1) != c || images.extent(2) != s || images.extent(3) != s) {
    throw DimensionError("forward: images " + shape_string(images.shape()) + " do not match [B," +
                         std::to_string(c) + "," + std::to_string(s) + "," + std::to_string(s) + "]");
  }
  const std::size_t b = images.extent(0), grid = config.grid(), d = config.embed_dim;
  if (params.depth() != config.depth) throw DimensionError("forward: parameter depth differs from config");

  // Patchify: [B,C,G,p,G,p] -> [B,G,G,C,p,p] -> [B*N, C*p*p].
  constexpr std::array<std::size_t, 6> kPatchify = {0, 2, 4, 1, 3, 5};
  Tensor<T> patches = ops::reshape(g, images, Shape{b, c, grid, p, grid, p});
  patches = ops::permute(g, patches, std::span<const std::size_t>(kPatchify));
  patches = ops::reshape(g, patches, Shape{b * grid * grid, c * p * p});
  Tensor<T> embed_w = ops::reshape(g, params.at("patch_embed.weight"), Shape{d, c * p * p});
  Tensor<T> x = ops::linear(g, patches, embed_w, params.at("patch_embed.bias"));
  x = ops::reshape(g, x, Shape{b, grid * grid, d});
  x = ops::prepend_token(g, x, params.at("cls_token"));
  x = ops::add(g, x, params.at("pos_embed"));

  const double rate = config.drop_path_rate;
  for (std::size_t blk = 0; blk < config.depth; ++blk) {
    auto at = [&](std::string_view leaf) { return params.at(block_path(blk, leaf)); };
    Tensor<T> h = ops::layer_norm(g, x, at("norm1.weight"), at("norm1.bias"));
    h = attention(g, h, at("attn.qkv.weight"), at("attn.qkv.bias"), at("attn.proj.weight"),
                  at("attn.proj.bias"), config.num_heads);
    x = ops::add(g, x, drop_path(g, h, rate, mode, rng));
    h = ops::layer_norm(g, x, at("norm2.weight"), at("norm2.bias"));
    h = mlp_forward(g, h, params.mlp(blk, MlpPart::kFc1Weight), params.mlp(blk, MlpPart::kFc1Bias),
                    params.mlp(blk, MlpPart::kFc2Weight), params.mlp(blk, MlpPart::kFc2Bias));
    x = ops::add(g, x, drop_path(g, h, rate, mode, rng));
    if (probe != nullptr) probe->block_outputs.push_back(x.clone());
  }
  x = ops::layer_norm(g, x, params.at("norm.weight"), params.at("norm.bias"));
  Tensor<T> cls = ops::select(g, x, 1, 0);
  return ops::linear(g, cls, params.at("head.weight"), params.at("head.bias"));
}

#define VITSLIM_INSTANTIATE_VIT(T)                                                                \
  template Tensor<T> soft_targets(const Batch<T>&, std::size_t);                                   \
  template BuiltModel<T> build_model<T>(const ModelConfig&, std::uint64_t, const InitSpec&);        \
  template Tensor<T> drop_path(Graph<T>&, const Tensor<T>&, double, Mode, Rng*);                   \
  template Tensor<T> mlp_forward(Graph<T>&, const Tensor<T>&, const Tensor<T>&, const Tensor<T>&,  \
                                 const Tensor<T>&, const Tensor<T>&);                              \
  template Tensor<T> attention(Graph<T>&, const Tensor<T>&, const Tensor<T>&, const Tensor<T>&,    \
                               const Tensor<T>&, const Tensor<T>&, std::size_t);                   \
  template Tensor<T> forward(Graph<T>&, const ParamSet<T>&, const ModelConfig&, const Tensor<T>&,  \
                             Mode, Rng*, ActivationProbe<T>*);

VITSLIM_INSTANTIATE_VIT(float)
VITSLIM_INSTANTIATE_VIT(double)

}  // namespace vitslim
