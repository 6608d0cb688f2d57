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

#include "vitslim/config_json.hpp"

#include <optional>
#include <string>

#include "vitslim/error.hpp"

namespace vitslim {
namespace {

using nlohmann::json;

std::size_t as_size(const json& v, const std::string& key) {
  if (!v.is_number_integer() || (v.is_number_integer() && !v.is_number_unsigned() && v.get<long long>() < 0)) {
    throw ConfigError("'" + key + "' must be a non-negative integer");
  }
  return v.get<std::size_t>();
}

double as_double(const json& v, const std::string& key) {
  if (!v.is_number()) throw ConfigError("'" + key + "' must be a number");
  return v.get<double>();
}

bool as_bool(const json& v, const std::string& key) {
  if (!v.is_boolean()) throw ConfigError("'" + key + "' must be true or false");
  return v.get<bool>();
}

std::string as_string(const json& v, const std::string& key) {
  if (!v.is_string()) throw ConfigError("'" + key + "' must be a string");
  return v.get<std::string>();
}

void require_object(const json& object, const char* what) {
  if (!object.is_object()) throw ConfigError(std::string(what) + " configuration must be a JSON object");
}

}  // namespace

json model_config_to_json(const ModelConfig& c) {
  json j;
  j["image_size"] = c.image_size;
  j["patch_size"] = c.patch_size;
  j["in_channels"] = c.in_channels;
  j["embed_dim"] = c.embed_dim;
  j["depth"] = c.depth;
  j["num_heads"] = c.num_heads;
  j["mlp_hidden"] = c.mlp_hidden;
  j["num_classes"] = c.num_classes;
  j["drop_path_rate"] = c.drop_path_rate;
  j["variant"] = variant_name(c.variant);
  if (const auto* g = std::get_if<Grouped>(&c.variant)) j["group_size"] = g->group_size;
  if (const auto* s = std::get_if<Shallow>(&c.variant)) j["width_ratio"] = to_string(s->width_ratio);
  return j;
}

ModelConfig model_config_from_json(const json& object, const ModelConfig& base) {
  require_object(object, "model");
  ModelConfig c = base;
  std::string variant = variant_name(base.variant);
  std::optional<std::size_t> group_size;
  std::optional<Ratio> width_ratio;
  for (const auto& [key, v] : object.items()) {
    const std::string name = "model." + key;
    if (key == "image_size") c.image_size = as_size(v, name);
    else if (key == "patch_size") c.patch_size = as_size(v, name);
    else if (key == "in_channels") c.in_channels = as_size(v, name);
    else if (key == "embed_dim") c.embed_dim = as_size(v, name);
    else if (key == "depth") c.depth = as_size(v, name);
    else if (key == "num_heads") c.num_heads = as_size(v, name);
    else if (key == "mlp_hidden") c.mlp_hidden = as_size(v, name);
    else if (key == "num_classes") c.num_classes = as_size(v, name);
    else if (key == "drop_path_rate") c.drop_path_rate = as_double(v, name);
    else if (key == "variant") variant = as_string(v, name);
    else if (key == "group_size") group_size = as_size(v, name);
    else if (key == "width_ratio") width_ratio = parse_ratio(v.is_string() ? v.get<std::string>() : v.dump());
    else throw ConfigError("unknown configuration key '" + name + "'");
  }
  if (variant == "baseline") {
    if (group_size || width_ratio) throw ConfigError("the baseline variant takes no group_size or width_ratio");
    c.variant = Baseline{};
  } else if (variant == "grouped") {
    if (width_ratio) throw ConfigError("model.width_ratio applies only to the shallow variant");
    Grouped g;
    if (const auto* old = std::get_if<Grouped>(&base.variant)) g = *old;
    if (group_size) g.group_size = *group_size;
    c.variant = g;
  } else if (variant == "shallow") {
    if (group_size) throw ConfigError("model.group_size applies only to the grouped variant");
    Shallow s;
    if (const auto* old = std::get_if<Shallow>(&base.variant)) s = *old;
    if (width_ratio) s.width_ratio = *width_ratio;
    c.variant = s;
  } else {
    throw ConfigError("unknown variant '" + variant + "' (expected baseline, grouped or shallow)");
  }
  return c;
}

json train_config_to_json(const TrainConfig& c) {
  json j;
  j["epochs"] = c.epochs;
  j["warmup_epochs"] = c.warmup_epochs;
  j["base_lr"] = c.base_lr;
  j["min_lr"] = c.min_lr;
  j["batch_size"] = c.batch_size;
  j["beta1"] = c.beta1;
  j["beta2"] = c.beta2;
  j["adam_eps"] = c.adam_eps;
  j["weight_decay"] = c.weight_decay;
  j["mixup_alpha"] = c.mixup_alpha;
  j["cutmix_alpha"] = c.cutmix_alpha;
  j["mix_switch_prob"] = c.mix_switch_prob;
  j["drop_path"] = c.drop_path;
  j["ema_decay"] = c.ema_decay;
  j["augment"] = c.augment;
  j["log_timing"] = c.log_timing;
  j["seeds"] = c.seeds;
  return j;
}

TrainConfig train_config_from_json(const json& object, const TrainConfig& base) {
  require_object(object, "train");
  TrainConfig c = base;
  for (const auto& [key, v] : object.items()) {
    const std::string name = "train." + key;
    if (key == "epochs") c.epochs = as_size(v, name);
    else if (key == "warmup_epochs") c.warmup_epochs = as_size(v, name);
    else if (key == "base_lr") c.base_lr = as_double(v, name);
    else if (key == "min_lr") c.min_lr = as_double(v, name);
    else if (key == "batch_size") c.batch_size = as_size(v, name);
    else if (key == "beta1") c.beta1 = as_double(v, name);
    else if (key == "beta2") c.beta2 = as_double(v, name);
    else if (key == "adam_eps") c.adam_eps = as_double(v, name);
    else if (key == "weight_decay") c.weight_decay = as_double(v, name);
    else if (key == "mixup_alpha") c.mixup_alpha = as_double(v, name);
    else if (key == "cutmix_alpha") c.cutmix_alpha = as_double(v, name);
    else if (key == "mix_switch_prob") c.mix_switch_prob = as_double(v, name);
    else if (key == "drop_path") c.drop_path = as_double(v, name);
    else if (key == "ema_decay") c.ema_decay = as_double(v, name);
    else if (key == "augment") c.augment = as_bool(v, name);
    else if (key == "log_timing") c.log_timing = as_bool(v, name);
    else if (key == "seeds") {
      if (!v.is_array()) throw ConfigError("'train.seeds' must be an array of integers");
      c.seeds.clear();
      for (const auto& s : v) c.seeds.push_back(static_cast<std::uint64_t>(as_size(s, name)));
    } else {
      throw ConfigError("unknown configuration key '" + name + "'");
    }
  }
  return c;
}

}  // namespace vitslim
