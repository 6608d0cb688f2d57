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
#include <filesystem>
#include <iosfwd>

#include "vitslim/model_config.hpp"
#include "vitslim/param_set.hpp"

namespace vitslim {

// Binary checkpoint layout (all integers little-endian):
//
//   "VSLM"                       magic
//   u32                          format version
//   model config                 8 x u32 extents, f64 drop_path_rate,
//                                u8 variant tag, u32 group_size,
//                                u32 width num, u32 width den
//   u8                           parameter layout
//   u32 depth, depth x u32       sharing map (block -> MLP storage)
//   u32 n, n x record            one record per storage:
//                                u32 path length, UTF-8 path, u8 dtype,
//                                u32 rank, rank x u64 extents, payload
//
// Shared MLP storages appear exactly once.
inline constexpr char kCheckpointMagic[4] = {'V', 'S', 'L', 'M'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

template <Scalar T>
struct Checkpoint {
  ModelConfig config;
  ParamSet<T> params;
};

template <Scalar T>
void write_checkpoint(std::ostream& out, const ModelConfig& config, const ParamSet<T>& params);

template <Scalar T>
void save_checkpoint(const std::filesystem::path& path, const ModelConfig& config,
                     const ParamSet<T>& params);

// Reads a checkpoint, converting stored values to T if the dtypes differ.
// Throws FormatError on malformed input.
template <Scalar T>
Checkpoint<T> read_checkpoint(std::istream& in);

template <Scalar T>
Checkpoint<T> load_checkpoint(const std::filesystem::path& path);

}  // namespace vitslim
