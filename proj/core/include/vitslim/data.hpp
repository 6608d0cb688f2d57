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
#include <filesystem>
#include <span>
#include <utility>
#include <vector>

#include "vitslim/rng.hpp"

namespace vitslim {

struct NormStats {
  std::vector<float> mean;  // per channel
  std::vector<float> std;   // per channel
};

// Images stored as floats in [0, 1], layout [N, C, H, W].
struct Dataset {
  std::size_t channels = 3;
  std::size_t height = 32;
  std::size_t width = 32;
  std::size_t num_classes = 10;
  std::vector<float> pixels;
  std::vector<std::uint32_t> labels;

  std::size_t size() const { return labels.size(); }
  std::size_t image_numel() const { return channels * height * width; }
  std::span<const float> image(std::size_t i) const {
    return std::span<const float>(pixels).subspan(i * image_numel(), image_numel());
  }
};

// CIFAR-10 binary records: 1 label byte followed by 3 x 32 x 32 channel-planar
// pixel bytes.
inline constexpr std::size_t kCifarSide = 32;
inline constexpr std::size_t kCifarImageBytes = 3 * kCifarSide * kCifarSide;
inline constexpr std::size_t kCifarRecordBytes = 1 + kCifarImageBytes;
inline constexpr std::size_t kCifarClasses = 10;

// Parses records from one buffer. `base_offset` is added to reported error
// offsets. Throws FormatError if the size is not a whole number of records,
// RecordError on a label >= 10.
Dataset parse_cifar_binary(std::span<const std::uint8_t> bytes, std::uint64_t base_offset = 0);

// Loads the files in order and concatenates their records.
Dataset load_cifar_binary(std::span<const std::filesystem::path> paths);

// Inverse of parse_cifar_binary for 3x32x32 datasets; pixels are quantized
// with round(x * 255).
std::vector<std::uint8_t> encode_cifar_binary(const Dataset& data);
void write_cifar_binary(const std::filesystem::path& path, const Dataset& data);

struct SynthSpec {
  std::size_t num_classes = 10;
  std::size_t per_class = 200;
  std::size_t image_size = 32;
  std::size_t channels = 3;
  double noise_std = 0.05;
  std::uint64_t seed = 0;
};

// Per-class templates with values in [0, 1], each of length C*H*W. Smooth
// (low-frequency) patterns, redrawn until every pair is at least
// 0.05 * sqrt(C*H*W) apart in L2. Throws GenerationError after 100 failed
// draws.
std::vector<std::vector<float>> synth_templates(const SynthSpec& spec);

// Class c's samples are its template plus Gaussian noise, clipped to [0, 1].
// Samples are interleaved by class: index i has label i % num_classes.
Dataset synth_dataset(const SynthSpec& spec);

// Stratified split: the last ceil(fraction * n_c) samples of each class go to
// the held-out set. Returns (train, held_out).
std::pair<Dataset, Dataset> split_holdout(const Dataset& data, double fraction);

// Per-channel mean and population std over the whole dataset.
NormStats compute_norm_stats(const Dataset& data);

enum class AugmentMode { kTrain, kEval };

inline constexpr std::size_t kAugmentPad = 4;

// Deterministic augmentation: optional horizontal flip, then reflect-pad by 4
// and crop the window whose top-left corner is (dy, dx), 0 <= dy, dx <= 8.
std::vector<float> augment_fixed(std::span<const float> image, std::size_t channels,
                                 std::size_t height, std::size_t width, bool flip,
                                 std::size_t dy, std::size_t dx);

// Random flip (p = 0.5) and pad-crop in train mode; identity in eval mode.
std::vector<float> augment(std::span<const float> image, std::size_t channels,
                           std::size_t height, std::size_t width, Rng& rng, AugmentMode mode);

}  // namespace vitslim
