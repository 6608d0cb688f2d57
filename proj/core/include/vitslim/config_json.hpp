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

#include <nlohmann/json.hpp>

#include "vitslim/model_config.hpp"
#include "vitslim/train.hpp"

namespace vitslim {

// Keys (relative to the "model." prefix):
//   image_size patch_size in_channels embed_dim depth num_heads mlp_hidden
//   num_classes drop_path_rate variant ("baseline" | "grouped" | "shallow")
//   group_size (grouped only) width_ratio ("1/2", shallow only)
nlohmann::json model_config_to_json(const ModelConfig& config);

// Applies `object` on top of `base`. Unknown keys, wrong types and keys that
// do not apply to the chosen variant throw ConfigError. The result is not
// validated.
ModelConfig model_config_from_json(const nlohmann::json& object, const ModelConfig& base);

// Keys (relative to the "train." prefix) are the TrainConfig field names.
nlohmann::json train_config_to_json(const TrainConfig& config);
TrainConfig train_config_from_json(const nlohmann::json& object, const TrainConfig& base);

}  // namespace vitslim
