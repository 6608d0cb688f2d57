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
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace vitslim {

struct StabilityMetrics {
  std::size_t peak_epoch = 0;  // 1-indexed, earliest on ties
  double peak = 0.0;
  double final = 0.0;          // last entry
  double gap = 0.0;            // peak - final, never negative
};

// Peak-to-final stability summary of a validation accuracy curve.
StabilityMetrics stability_metrics(std::span<const double> curve);

struct TTestResult {
  double t = 0.0;
  std::size_t df = 0;
  std::optional<double> p;  // two-sided; empty when degenerate
  bool degenerate = false;  // differences have zero variance
  double mean_diff = 0.0;
  double sd_diff = 0.0;
};

// Paired t-test on a - b. Needs equal lengths >= 2.
TTestResult paired_t_test(std::span<const double> a, std::span<const double> b);

struct MeanStd {
  double mean = 0.0;
  double std = 0.0;  // sample std (n - 1); 0 for a single value
  std::size_t n = 0;
};

MeanStd mean_std(std::span<const double> values);

// Per-metric mean and sample std across seeds. Every run must supply the
// same metric names.
std::map<std::string, MeanStd> aggregate_seeds(const std::vector<std::map<std::string, double>>& runs);

}  // namespace vitslim
