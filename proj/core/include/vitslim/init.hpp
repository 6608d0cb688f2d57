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

#include "vitslim/model_config.hpp"
#include "vitslim/param_set.hpp"

namespace vitslim {

struct InitSpec {
  double weight_std = 0.02;   // truncated normal std for all matrices
  double truncation = 2.0;    // rejection bound in units of std
  double bias_fill = 0.0;
  double embed_std = 0.02;    // class token and positional embedding
  bool zero_head = true;

  void validate() const;
};

// 1/sqrt(2): applied to fc1.weight, fc2.weight and fc1.bias of a shared MLP.
inline constexpr double kSharedMlpScale = 0.70710678118654752440;

// Full-width, unshared parameters for `config` (its variant is ignored).
// Draw order is fixed: patch embedding, class token, positional embedding,
// then per block qkv, proj, fc1, fc2. Same (config, seed) gives bitwise
// identical values for every variant.
template <Scalar T>
ParamSet<T> base_init(const ModelConfig& config, std::uint64_t seed, const InitSpec& spec = {});

// Groups of `group_size` consecutive blocks share the first member's MLP,
// with fc1.weight, fc2.weight and fc1.bias scaled by 1/sqrt(2). fc2.bias is
// left untouched. Returns a deep copy; `params` is not modified.
template <Scalar T>
ParamSet<T> apply_grouped_sharing(const ParamSet<T>& params, std::size_t group_size);

// Keeps the leading width_ratio * hidden rows of fc1.weight and fc1.bias and
// the matching leading columns of fc2.weight. Returns a deep copy.
template <Scalar T>
ParamSet<T> slice_shallow(const ParamSet<T>& params, Ratio width_ratio);

// base_init followed by the transform selected by config.variant.
template <Scalar T>
ParamSet<T> init_model(const ModelConfig& config, std::uint64_t seed, const InitSpec& spec = {});

}  // namespace vitslim
