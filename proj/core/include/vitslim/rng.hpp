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
#include <initializer_list>
#include <random>

namespace vitslim {

// Every consumer of randomness owns a stream. Streams are derived from the
// run seed by hashing (seed, stream, counters...), so enabling or disabling
// one consumer never shifts the draws seen by another.
enum class Stream : std::uint64_t {
  kInit = 1,
  kDataOrder = 2,
  kAugment = 3,
  kDropPath = 4,
  kMixup = 5,
  kSynthetic = 6,
  kBench = 7,
  kTest = 8,
};

constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t derive_key(std::uint64_t seed, Stream stream,
                                   std::initializer_list<std::uint64_t> counters = {}) noexcept {
  std::uint64_t key = splitmix64(seed ^ splitmix64(static_cast<std::uint64_t>(stream)));
  for (std::uint64_t c : counters) key = splitmix64(key ^ splitmix64(c + 0x632be59bd9b4e019ULL));
  return key;
}

using Rng = std::mt19937_64;

inline Rng make_rng(std::uint64_t seed, Stream stream,
                    std::initializer_list<std::uint64_t> counters = {}) {
  return Rng(derive_key(seed, stream, counters));
}

// Uniform double in [0, 1) built from the top 53 bits; independent of the
// standard library's distribution implementation.
inline double uniform01(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

// Standard normal via Box-Muller. Stateless apart from the engine, so a
// sequence of draws depends only on the engine state.
double standard_normal(Rng& rng);

// Gamma(shape, 1) via Marsaglia-Tsang, used for Beta draws.
double gamma_draw(Rng& rng, double shape);

// Beta(alpha, beta). alpha, beta > 0.
double beta_draw(Rng& rng, double alpha, double beta);

}  // namespace vitslim
