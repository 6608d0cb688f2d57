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
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "vitslim/param_set.hpp"

namespace vitslim {

// Linear warmup from 0 to base_lr over warmup_steps, then cosine decay to
// min_lr at total_steps. Throws ConfigError if warmup_steps >= total_steps.
double cosine_lr(std::size_t step, std::size_t total_steps, std::size_t warmup_steps,
                 double base_lr, double min_lr);

struct AdamWConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.05;
};

// One AdamW update of a single tensor at step t (1-based):
//   theta <- theta - lr * wd * theta
//   theta <- theta - lr * m_hat / (sqrt(v_hat) + eps)
template <Scalar T>
void adamw_update(std::span<T> param, std::span<const T> grad, std::span<T> m, std::span<T> v,
                  std::size_t t, double lr, const AdamWConfig& config, double weight_decay);

// AdamW over the unique storages of a ParamSet. A shared MLP is one storage,
// so it is updated once per step with the sum of its blocks' gradients.
template <Scalar T>
class AdamW {
 public:
  // `decays(path, tensor)` selects the storages that receive weight decay.
  using DecayFilter = std::function<bool(const std::string&, const Tensor<T>&)>;

  AdamW(const ParamSet<T>& params, AdamWConfig config, DecayFilter decays = matrices_only);

  void step(ParamSet<T>& params, double lr);
  std::size_t steps() const noexcept { return steps_; }
  const AdamWConfig& config() const noexcept { return config_; }

  // Matrices only: biases, norm affines, class token and positional
  // embedding are not decayed.
  static bool matrices_only(const std::string& path, const Tensor<T>& t);
  static bool everything(const std::string&, const Tensor<T>&) { return true; }

 private:
  struct Slot {
    std::string path;
    std::vector<T> m;
    std::vector<T> v;
    bool decay = true;
  };
  AdamWConfig config_;
  std::vector<Slot> slots_;
  std::size_t steps_ = 0;
};

// Exponential moving average of the unique storages. Shared MLPs have one
// shadow, mirroring the model.
template <Scalar T>
class Ema {
 public:
  Ema(const ParamSet<T>& params, double decay);

  // shadow <- decay * shadow + (1 - decay) * param
  void update(const ParamSet<T>& params);
  const ParamSet<T>& shadow() const noexcept { return shadow_; }
  ParamSet<T>& shadow() noexcept { return shadow_; }
  double decay() const noexcept { return decay_; }

 private:
  ParamSet<T> shadow_;
  double decay_;
};

extern template class AdamW<float>;
extern template class AdamW<double>;
extern template class Ema<float>;
extern template class Ema<double>;

}  // namespace vitslim
