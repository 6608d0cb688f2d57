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

#include "vitslim/optim.hpp"

#include <cmath>
#include <numbers>

#include "vitslim/error.hpp"

namespace vitslim {

double cosine_lr(std::size_t step, std::size_t total_steps, std::size_t warmup_steps,
                 double base_lr, double min_lr) {
  if (warmup_steps >= total_steps) {
    throw ConfigError("warmup (" + std::to_string(warmup_steps) + " steps) must be shorter than training (" +
                      std::to_string(total_steps) + " steps)");
  }
  if (step > total_steps) throw ContractError("lr step beyond the end of training");
  if (step < warmup_steps) {
    return base_lr * static_cast<double>(step) / static_cast<double>(warmup_steps);
  }
  const double progress = static_cast<double>(step - warmup_steps) /
                          static_cast<double>(total_steps - warmup_steps);
  return min_lr + 0.5 * (base_lr - min_lr) * (1.0 + std::cos(std::numbers::pi * progress));
}

template <Scalar T>
void adamw_update(std::span<T> param, std::span<const T> grad, std::span<T> m, std::span<T> v,
                  std::size_t t, double lr, const AdamWConfig& config, double weight_decay) {
  if (grad.size() != param.size() || m.size() != param.size() || v.size() != param.size()) {
    throw DimensionError("adamw: state and gradient sizes must match the parameter");
  }
  if (t == 0) throw ContractError("adamw: step counter is 1-based");
  const double bc1 = 1.0 - std::pow(config.beta1, static_cast<double>(t));
  const double bc2 = 1.0 - std::pow(config.beta2, static_cast<double>(t));
  const T b1 = static_cast<T>(config.beta1), b2 = static_cast<T>(config.beta2);
  const T decay = static_cast<T>(1.0 - lr * weight_decay);
  const T step_size = static_cast<T>(lr / bc1);
  const T inv_sqrt_bc2 = static_cast<T>(1.0 / std::sqrt(bc2));
  const T eps = static_cast<T>(config.eps);
  for (std::size_t i = 0; i < param.size(); ++i) {
    const T g = grad[i];
    m[i] = b1 * m[i] + (T(1) - b1) * g;
    v[i] = b2 * v[i] + (T(1) - b2) * g * g;
    param[i] *= decay;
    param[i] -= step_size * m[i] / (std::sqrt(v[i]) * inv_sqrt_bc2 + eps);
  }
}

template <Scalar T>
bool AdamW<T>::matrices_only(const std::string& path, const Tensor<T>& t) {
  return t.rank() >= 2 && path != "cls_token" && path != "pos_embed";
}

template <Scalar T>
AdamW<T>::AdamW(const ParamSet<T>& params, AdamWConfig config, DecayFilter decays)
    : config_(config) {
  for (const auto& e : params.entries()) {
    slots_.push_back(Slot{e.path, std::vector<T>(e.tensor.numel(), T(0)),
                          std::vector<T>(e.tensor.numel(), T(0)), decays(e.path, e.tensor)});
  }
}

template <Scalar T>
void AdamW<T>::step(ParamSet<T>& params, double lr) {
  if (params.entries().size() != slots_.size()) {
    throw DimensionError("adamw: parameter set changed since the optimizer was created");
  }
  ++steps_;
  for (std::size_t i = 0; i < slots_.size(); ++i) {
    Slot& slot = slots_[i];
    Tensor<T> p = params.entries()[i].tensor;
    if (params.entries()[i].path != slot.path || p.numel() != slot.m.size()) {
      throw DimensionError("adamw: state does not match parameter '" + params.entries()[i].path + "'");
    }
    if (!p.has_grad()) continue;
    adamw_update<T>(p.data(), p.grad(), slot.m, slot.v, steps_, lr, config_,
                    slot.decay ? config_.weight_decay : 0.0);
  }
}

template <Scalar T>
Ema<T>::Ema(const ParamSet<T>& params, double decay) : shadow_(params.clone()), decay_(decay) {
  if (!(decay >= 0.0 && decay < 1.0)) throw ConfigError("EMA decay must lie in [0, 1)");
  shadow_.set_requires_grad(false);
}

template <Scalar T>
void Ema<T>::update(const ParamSet<T>& params) {
  if (params.entries().size() != shadow_.entries().size()) {
    throw DimensionError("ema: parameter set does not mirror the shadow");
  }
  const T keep = static_cast<T>(decay_), take = static_cast<T>(1.0 - decay_);
  for (std::size_t i = 0; i < params.entries().size(); ++i) {
    Tensor<T> s = shadow_.entries()[i].tensor;
    const Tensor<T>& p = params.entries()[i].tensor;
    if (s.shape() != p.shape()) throw DimensionError("ema: shape mismatch for '" + params.entries()[i].path + "'");
    auto sd = s.data();
    auto pd = p.data();
    for (std::size_t j = 0; j < sd.size(); ++j) sd[j] = keep * sd[j] + take * pd[j];
  }
}

template void adamw_update<float>(std::span<float>, std::span<const float>, std::span<float>,
                                  std::span<float>, std::size_t, double, const AdamWConfig&, double);
template void adamw_update<double>(std::span<double>, std::span<const double>, std::span<double>,
                                   std::span<double>, std::size_t, double, const AdamWConfig&, double);
template class AdamW<float>;
template class AdamW<double>;
template class Ema<float>;
template class Ema<double>;

}  // namespace vitslim
