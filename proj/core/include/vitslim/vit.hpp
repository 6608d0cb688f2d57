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

#include <cstdint>
#include <vector>

#include "vitslim/accounting.hpp"
#include "vitslim/graph.hpp"
#include "vitslim/init.hpp"
#include "vitslim/model_config.hpp"
#include "vitslim/param_set.hpp"
#include "vitslim/rng.hpp"

namespace vitslim {

enum class Mode { kTrain, kEval };

// Images plus labels. A mixed batch (MixUp/CutMix) carries a second label
// per sample and the weight `lam` of the first.
template <Scalar T>
struct Batch {
  Tensor<T> images;  // [B, C, H, W], normalized
  std::vector<std::uint32_t> labels;
  std::vector<std::uint32_t> mix_labels;
  double lam = 1.0;

  std::size_t size() const { return labels.size(); }
  bool mixed() const { return !mix_labels.empty(); }
};

// lam * onehot(labels) + (1 - lam) * onehot(mix_labels), shape [B, classes].
template <Scalar T>
Tensor<T> soft_targets(const Batch<T>& batch, std::size_t num_classes);

// Optional per-block outputs collected during forward.
template <Scalar T>
struct ActivationProbe {
  std::vector<Tensor<T>> block_outputs;  // [B, tokens, d] after each block
};

template <Scalar T>
struct BuiltModel {
  ParamSet<T> params;
  ModelStats stats;
};

// Initializes parameters for config.variant and reports their statistics.
template <Scalar T>
BuiltModel<T> build_model(const ModelConfig& config, std::uint64_t seed, const InitSpec& spec = {});

// Patch embedding, class token, positional embedding, pre-norm blocks, final
// norm and a classifier on the class token. Returns logits [B, classes].
// `rng` is consumed only in train mode with a positive drop path rate.
template <Scalar T>
Tensor<T> forward(Graph<T>& g, const ParamSet<T>& params, const ModelConfig& config,
                  const Tensor<T>& images, Mode mode, Rng* rng = nullptr,
                  ActivationProbe<T>* probe = nullptr);

// Multi-head self-attention over x[B, T, d] with a fused, biased qkv
// projection and scale 1/sqrt(d / heads).
template <Scalar T>
Tensor<T> attention(Graph<T>& g, const Tensor<T>& x, const Tensor<T>& qkv_weight,
                    const Tensor<T>& qkv_bias, const Tensor<T>& proj_weight,
                    const Tensor<T>& proj_bias, std::size_t num_heads);

// fc2 . gelu(fc1 . x + b1) + b2, token-wise. fc1: [hidden, d], fc2: [d, hidden].
template <Scalar T>
Tensor<T> mlp_forward(Graph<T>& g, const Tensor<T>& x, const Tensor<T>& fc1_weight,
                      const Tensor<T>& fc1_bias, const Tensor<T>& fc2_weight,
                      const Tensor<T>& fc2_bias);

// Stochastic depth. Identity in eval mode or at rate 0; in train mode each
// sample is kept with probability 1 - rate and survivors scaled by
// 1 / (1 - rate).
template <Scalar T>
Tensor<T> drop_path(Graph<T>& g, const Tensor<T>& x, double rate, Mode mode, Rng* rng);

}  // namespace vitslim
