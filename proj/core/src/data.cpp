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

#include "vitslim/data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iterator>
#include <limits>
#include <numbers>

#include "vitslim/error.hpp"

namespace vitslim {

Dataset parse_cifar_binary(std::span<const std::uint8_t> bytes, std::uint64_t base_offset) {
  if (bytes.size() % kCifarRecordBytes != 0) {
    const std::uint64_t partial = bytes.size() / kCifarRecordBytes * kCifarRecordBytes;
    throw FormatError("CIFAR binary size " + std::to_string(bytes.size()) +
                          " is not a multiple of " + std::to_string(kCifarRecordBytes),
                      base_offset + partial);
  }
  Dataset ds;
  const std::size_t n = bytes.size() / kCifarRecordBytes;
  ds.pixels.reserve(n * kCifarImageBytes);
  ds.labels.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t at = i * kCifarRecordBytes;
    const std::uint8_t label = bytes[at];
    if (label >= kCifarClasses) {
      throw RecordError("label " + std::to_string(label) + " >= " + std::to_string(kCifarClasses) +
                            " in record " + std::to_string(i),
                        base_offset + at);
    }
    ds.labels.push_back(label);
    for (std::size_t j = 1; j <= kCifarImageBytes; ++j) {
      ds.pixels.push_back(static_cast<float>(bytes[at + j]) / 255.0f);
    }
  }
  return ds;
}

Dataset load_cifar_binary(std::span<const std::filesystem::path> paths) {
  Dataset all;
  for (const auto& path : paths) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open dataset file: " + path.string());
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    Dataset part;
    try {
      part = parse_cifar_binary(bytes);
    } catch (const RecordError& e) {
      throw RecordError(path.string() + ": " + e.detail(), e.offset());
    } catch (const FormatError& e) {
      throw FormatError(path.string() + ": " + e.detail(), e.offset());
    }
    all.pixels.insert(all.pixels.end(), part.pixels.begin(), part.pixels.end());
    all.labels.insert(all.labels.end(), part.labels.begin(), part.labels.end());
  }
  if (all.labels.empty()) throw FormatError("no CIFAR records found", 0);
  return all;
}

std::vector<std::uint8_t> encode_cifar_binary(const Dataset& data) {
  if (data.channels != 3 || data.height != kCifarSide || data.width != kCifarSide) {
    throw ContractError("CIFAR binary needs 3x32x32 images");
  }
  std::vector<std::uint8_t> out;
  out.reserve(data.size() * kCifarRecordBytes);
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (data.labels[i] >= kCifarClasses) throw ContractError("label does not fit CIFAR-10");
    out.push_back(static_cast<std::uint8_t>(data.labels[i]));
    for (float v : data.image(i)) {
      out.push_back(static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0f, 1.0f) * 255.0f)));
    }
  }
  return out;
}

void write_cifar_binary(const std::filesystem::path& path, const Dataset& data) {
  const auto bytes = encode_cifar_binary(data);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot open for writing: " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

std::vector<std::vector<float>> synth_templates(const SynthSpec& spec) {
  if (spec.num_classes == 0 || spec.per_class == 0 || spec.image_size == 0 || spec.channels == 0 ||
      !(spec.noise_std >= 0.0)) {
    throw ConfigError("synthetic dataset parameters must be positive");
  }
  const std::size_t s = spec.image_size, c = spec.channels, dim = c * s * s;
  const double min_dist = 0.5 * std::sqrt(static_cast<double>(dim)) * 0.1;
  constexpr double kTwoPi = 2.0 * std::numbers::pi;
  for (std::uint64_t attempt = 0; attempt < 100; ++attempt) {
    Rng rng = make_rng(spec.seed, Stream::kSynthetic, {0, attempt});
    std::vector<std::vector<float>> templates(spec.num_classes, std::vector<float>(dim));
    for (auto& t : templates) {
      for (std::size_t ch = 0; ch < c; ++ch) {
        // Sum of three plane waves with at most two cycles across the image.
        double fy[3], fx[3], phase[3], amp[3];
        for (int k = 0; k < 3; ++k) {
          fy[k] = std::floor(uniform01(rng) * 3.0);
          fx[k] = std::floor(uniform01(rng) * 3.0);
          phase[k] = uniform01(rng) * kTwoPi;
          amp[k] = 0.1 + 0.15 * uniform01(rng);
        }
        const double offset = 0.25 + 0.5 * uniform01(rng);
        for (std::size_t y = 0; y < s; ++y) {
          for (std::size_t x = 0; x < s; ++x) {
            double v = offset;
            for (int k = 0; k < 3; ++k) {
              v += amp[k] * std::sin(kTwoPi * (fy[k] * static_cast<double>(y) + fx[k] * static_cast<double>(x)) /
                                         static_cast<double>(s) + phase[k]);
            }
            t[(ch * s + y) * s + x] = static_cast<float>(std::clamp(v, 0.0, 1.0));
          }
        }
      }
    }
    double closest = std::numeric_limits<double>::infinity();
    for (std::size_t a = 0; a < templates.size(); ++a) {
      for (std::size_t b = a + 1; b < templates.size(); ++b) {
        double d2 = 0;
        for (std::size_t i = 0; i < dim; ++i) {
          const double diff = templates[a][i] - templates[b][i];
          d2 += diff * diff;
        }
        closest = std::min(closest, std::sqrt(d2));
      }
    }
    if (closest >= min_dist) return templates;
  }
  throw GenerationError("could not separate synthetic class templates in 100 draws");
}

Dataset synth_dataset(const SynthSpec& spec) {
  const auto templates = synth_templates(spec);
  Dataset ds;
  ds.channels = spec.channels;
  ds.height = ds.width = spec.image_size;
  ds.num_classes = spec.num_classes;
  const std::size_t dim = ds.image_numel(), n = spec.num_classes * spec.per_class;
  ds.pixels.resize(n * dim);
  ds.labels.resize(n);
  Rng rng = make_rng(spec.seed, Stream::kSynthetic, {1});
  for (std::size_t i = 0; i < n; ++i) {
    const auto label = static_cast<std::uint32_t>(i % spec.num_classes);
    ds.labels[i] = label;
    float* dst = ds.pixels.data() + i * dim;
    for (std::size_t j = 0; j < dim; ++j) {
      double v = templates[label][j];
      if (spec.noise_std > 0.0) v += spec.noise_std * standard_normal(rng);
      dst[j] = static_cast<float>(std::clamp(v, 0.0, 1.0));
    }
  }
  return ds;
}

std::pair<Dataset, Dataset> split_holdout(const Dataset& data, double fraction) {
  if (!(fraction > 0.0 && fraction < 1.0)) throw ConfigError("holdout fraction must lie in (0, 1)");
  std::vector<std::size_t> per_class(data.num_classes, 0);
  for (auto l : data.labels) ++per_class[l];
  std::vector<std::size_t> held(data.num_classes);
  for (std::size_t c = 0; c < data.num_classes; ++c) {
    held[c] = static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(per_class[c])));
  }
  Dataset train = data, test = data;
  train.pixels.clear();
  train.labels.clear();
  test.pixels.clear();
  test.labels.clear();
  std::vector<std::size_t> seen(data.num_classes, 0);
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto l = data.labels[i];
    Dataset& dst = (seen[l]++ >= per_class[l] - held[l]) ? test : train;
    dst.labels.push_back(l);
    auto img = data.image(i);
    dst.pixels.insert(dst.pixels.end(), img.begin(), img.end());
  }
  if (train.size() == 0 || test.size() == 0) throw ConfigError("holdout split left an empty side");
  return {std::move(train), std::move(test)};
}

NormStats compute_norm_stats(const Dataset& data) {
  NormStats st;
  const std::size_t plane = data.height * data.width;
  for (std::size_t ch = 0; ch < data.channels; ++ch) {
    double s = 0, ss = 0;
    for (std::size_t i = 0; i < data.size(); ++i) {
      const float* p = data.pixels.data() + i * data.image_numel() + ch * plane;
      for (std::size_t j = 0; j < plane; ++j) {
        s += p[j];
        ss += static_cast<double>(p[j]) * p[j];
      }
    }
    const double n = static_cast<double>(plane * data.size());
    const double mean = s / n;
    const double var = std::max(ss / n - mean * mean, 0.0);
    st.mean.push_back(static_cast<float>(mean));
    st.std.push_back(static_cast<float>(std::max(std::sqrt(var), 1e-6)));
  }
  return st;
}

std::vector<float> augment_fixed(std::span<const float> image, std::size_t channels,
                                 std::size_t height, std::size_t width, bool flip,
                                 std::size_t dy, std::size_t dx) {
  if (image.size() != channels * height * width) throw DimensionError("augment: image size mismatch");
  if (dy > 2 * kAugmentPad || dx > 2 * kAugmentPad) throw ContractError("augment: crop offset out of range");
  // Reflect index into [0, n) for a coordinate in padded space.
  auto reflect = [](std::ptrdiff_t i, std::ptrdiff_t n) {
    if (n == 1) return std::ptrdiff_t{0};
    while (i < 0 || i >= n) i = i < 0 ? -i : 2 * (n - 1) - i;
    return i;
  };
  const auto pad = static_cast<std::ptrdiff_t>(kAugmentPad);
  const auto h = static_cast<std::ptrdiff_t>(height), w = static_cast<std::ptrdiff_t>(width);
  std::vector<float> out(image.size());
  for (std::size_t ch = 0; ch < channels; ++ch) {
    for (std::ptrdiff_t y = 0; y < h; ++y) {
      const std::ptrdiff_t sy = reflect(y + static_cast<std::ptrdiff_t>(dy) - pad, h);
      for (std::ptrdiff_t x = 0; x < w; ++x) {
        std::ptrdiff_t sx = reflect(x + static_cast<std::ptrdiff_t>(dx) - pad, w);
        if (flip) sx = w - 1 - sx;
        out[(ch * height + static_cast<std::size_t>(y)) * width + static_cast<std::size_t>(x)] =
            image[(ch * height + static_cast<std::size_t>(sy)) * width + static_cast<std::size_t>(sx)];
      }
    }
  }
  return out;
}

std::vector<float> augment(std::span<const float> image, std::size_t channels, std::size_t height,
                           std::size_t width, Rng& rng, AugmentMode mode) {
  if (mode == AugmentMode::kEval) return std::vector<float>(image.begin(), image.end());
  const bool flip = uniform01(rng) < 0.5;
  const auto dy = static_cast<std::size_t>(uniform01(rng) * (2 * kAugmentPad + 1));
  const auto dx = static_cast<std::size_t>(uniform01(rng) * (2 * kAugmentPad + 1));
  return augment_fixed(image, channels, height, width, flip, dy, dx);
}

}  // namespace vitslim
