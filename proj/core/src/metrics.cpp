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

#include "vitslim/metrics.hpp"

#include <boost/math/distributions/students_t.hpp>
#include <cmath>
#include <limits>
#include <numeric>

#include "vitslim/error.hpp"

namespace vitslim {

StabilityMetrics stability_metrics(std::span<const double> curve) {
  if (curve.empty()) throw ContractError("stability_metrics needs a non-empty curve");
  StabilityMetrics m;
  m.peak = curve[0];
  m.peak_epoch = 1;
  for (std::size_t i = 1; i < curve.size(); ++i) {
    if (curve[i] > m.peak) {
      m.peak = curve[i];
      m.peak_epoch = i + 1;
    }
  }
  m.final = curve.back();
  m.gap = m.peak - m.final;
  return m;
}

MeanStd mean_std(std::span<const double> values) {
  if (values.empty()) throw ContractError("mean_std needs at least one value");
  MeanStd r;
  r.n = values.size();
  r.mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(r.n);
  if (r.n >= 2) {
    double ss = 0.0;
    for (double v : values) ss += (v - r.mean) * (v - r.mean);
    r.std = std::sqrt(ss / static_cast<double>(r.n - 1));
  }
  return r;
}

TTestResult paired_t_test(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw ContractError("paired_t_test: samples differ in length");
  if (a.size() < 2) throw ContractError("paired_t_test: needs at least two pairs");
  std::vector<double> d(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) d[i] = a[i] - b[i];
  const MeanStd ms = mean_std(d);
  TTestResult r;
  r.df = d.size() - 1;
  r.mean_diff = ms.mean;
  r.sd_diff = ms.std;
  if (ms.std == 0.0) {
    r.degenerate = true;
    r.t = std::numeric_limits<double>::quiet_NaN();
    return r;
  }
  r.t = ms.mean / (ms.std / std::sqrt(static_cast<double>(d.size())));
  const boost::math::students_t dist(static_cast<double>(r.df));
  r.p = 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(r.t)));
  return r;
}

std::map<std::string, MeanStd> aggregate_seeds(const std::vector<std::map<std::string, double>>& runs) {
  if (runs.empty()) throw ContractError("aggregate_seeds needs at least one run");
  std::map<std::string, MeanStd> out;
  for (const auto& [name, unused] : runs.front()) {
    std::vector<double> values;
    for (const auto& run : runs) {
      auto it = run.find(name);
      if (it == run.end()) throw ContractError("run is missing metric '" + name + "'");
      values.push_back(it->second);
    }
    out[name] = mean_std(values);
  }
  return out;
}

}  // namespace vitslim
