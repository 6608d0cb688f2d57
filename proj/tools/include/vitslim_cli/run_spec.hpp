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

#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "vitslim/data.hpp"
#include "vitslim/model_config.hpp"
#include "vitslim/train.hpp"

namespace vitslim::cli {

// Configuration document keys (flat JSON object, dotted names):
//
//   preset               "tiny" (default) or "vit_b16"; base model config
//   train_preset         "full" (default: 300 epochs, batch 1024, ...) or "smoke"
//   output_dir           default "runs"; relative paths resolve under
//                        $VITSLIM_OUTPUT_ROOT when that is set
//   baseline_run         run directory to compare against after training
//   model.<key>          image_size patch_size in_channels embed_dim depth
//                        num_heads mlp_hidden num_classes drop_path_rate
//                        variant group_size width_ratio
//   train.<key>          epochs warmup_epochs base_lr min_lr batch_size beta1
//                        beta2 adam_eps weight_decay mixup_alpha cutmix_alpha
//                        mix_switch_prob drop_path ema_decay augment
//                        log_timing seeds
//   data.source          "synthetic" (default) or "cifar"
//   data.train_files     CIFAR binary files for training
//   data.val_files       CIFAR binary files for validation; when empty a
//                        holdout is split off the training data
//   data.holdout_fraction  default 0.2
//   data.per_class       synthetic images per class, default 200
//   data.noise_std       synthetic noise, default 0.05
//   data.seed            synthetic template seed, default 7
//
// Synthetic data takes its class count, side and channels from the model.

struct DataSpec {
  std::string source = "synthetic";
  std::vector<std::filesystem::path> train_files;
  std::vector<std::filesystem::path> val_files;
  double holdout_fraction = 0.2;
  std::size_t per_class = 200;
  double noise_std = 0.05;
  std::uint64_t seed = 7;
};

struct RunSpec {
  std::string preset = "tiny";
  std::string train_preset = "full";
  ModelConfig model;
  TrainConfig train;
  DataSpec data;
  std::filesystem::path output_dir = "runs";
  std::optional<std::filesystem::path> baseline_run;
};

using Override = std::pair<std::string, std::string>;

// Parses a configuration file. Throws ConfigError on unreadable files,
// malformed JSON or a non-object document.
nlohmann::json read_document(const std::filesystem::path& path);

// Typed value of a command-line override: JSON when it parses, a list of
// integers for comma-separated train.seeds, otherwise the raw string.
nlohmann::json parse_override_value(const std::string& key, const std::string& text);

// Applies `document` then `overrides` on top of the defaults. Unknown keys,
// wrong types and invalid configurations raise ConfigError.
RunSpec resolve(const nlohmann::json& document, const std::vector<Override>& overrides,
                const std::optional<std::string>& output_root);

// Train and validation sets described by the spec.
std::pair<Dataset, Dataset> load_data(const DataSpec& data, const ModelConfig& model);

}  // namespace vitslim::cli
