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
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "vitslim/graph.hpp"
#include "vitslim/model_config.hpp"
#include "vitslim/param_set.hpp"
#include "vitslim/tensor.hpp"
#include "vitslim/vit.hpp"

namespace vitslim {

struct GradCheckOptions {
  double step = 1e-4;            // central difference half-width
  double tolerance = 1e-4;       // on the relative error below
  double denominator_floor = 1e-2;  // absorbs O(step^2) truncation on near-zero gradients
  std::size_t exhaustive_limit = 64;  // groups up to this size are checked entry by entry
  std::size_t samples = 16;           // entries checked per larger group
  std::uint64_t seed = 0;             // picks the sampled entries
};

// |analytic - numeric| / max(|analytic|, |numeric|, floor) for one entry.
double relative_error(double analytic, double numeric, double floor);

struct GroupCheck {
  std::string name;
  std::size_t size = 0;
  std::size_t checked = 0;
  double max_rel_error = 0.0;
  std::size_t worst_index = 0;
  bool pass = true;
};

struct GradCheckReport {
  std::vector<GroupCheck> groups;
  bool pass() const;
  std::string format() const;
};

struct NamedTensor {
  std::string name;
  Tensor<double> tensor;
};

// Builds the scalar loss from the named inputs. Called once on a tracking
// graph for the analytic gradient and repeatedly on a non-tracking graph for
// finite differences; the function must be deterministic.
using LossFn = std::function<Tensor<double>(Graph<double>&)>;

// Central finite differences against reverse-mode gradients. `prepare`, when
// set, runs on the tracking graph before the loss is built (fault injection).
GradCheckReport gradcheck(const LossFn& loss, const std::vector<NamedTensor>& inputs,
                          const GradCheckOptions& options = {},
                          const std::function<void(Graph<double>&)>& prepare = {});

// Mean soft cross-entropy of the model in eval mode on `batch`, checked per
// unique parameter storage.
GradCheckReport gradcheck_model(const ParamSet<double>& params, const ModelConfig& config,
                                const Batch<double>& batch, const GradCheckOptions& options = {},
                                std::optional<std::string> corrupt_op = std::nullopt);

struct SharedGradCheck {
  std::string storage;  // shared MLP tensor path
  double max_abs_diff = 0.0;
};

// Shared-storage gradient versus the sum of the gradients of independent
// copies (one per referencing block), all in one backward each.
std::vector<SharedGradCheck> check_shared_decomposition(const ParamSet<double>& params,
                                                        const ModelConfig& config,
                                                        const Batch<double>& batch);

// Seeded [B, C, H, W] normal images with labels i % classes.
Batch<double> random_batch(const ModelConfig& config, std::size_t batch, std::uint64_t seed);

}  // namespace vitslim
