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

#include <gtest/gtest.h>

#include "vitslim/accounting.hpp"
#include "vitslim/init.hpp"
#include "vitslim/vit.hpp"

namespace vitslim {
namespace {

TEST(CountParams, VitB16Table) {
  const auto b = count_params(vit_b16());
  const auto g = count_params(vit_b16(Grouped{}));
  const auto s = count_params(vit_b16(Shallow{}));
  EXPECT_EQ(b.total_params, 86567656u);
  EXPECT_EQ(g.total_params, 58233064u);
  EXPECT_EQ(s.total_params, 58237672u);
  EXPECT_EQ(b.mlp_params, 56669184u);
  EXPECT_EQ(g.mlp_params, 28334592u);
  EXPECT_EQ(s.mlp_params, 28339200u);
  EXPECT_EQ(b.mlp_params, 12u * (768 * 3072 + 3072 + 3072 * 768 + 768));
  EXPECT_EQ(b.total_params - g.total_params, 6u * 4722432u);
  EXPECT_EQ(b.unique_mlp_blocks, 12u);
  EXPECT_EQ(g.unique_mlp_blocks, 6u);
  EXPECT_EQ(s.unique_mlp_blocks, 12u);
  EXPECT_NEAR(g.reduction_fraction(b), 0.3273, 5e-5);
  EXPECT_EQ(format_millions(b.total_params), "86.6M");
  EXPECT_EQ(format_millions(g.mlp_params), "28.3M");
  EXPECT_EQ(format_expansion(b.expansion_ratio), "4x");
  EXPECT_EQ(format_expansion(s.expansion_ratio), "2x");
}

TEST(CountParams, SharedCountedOncePerStorage) {
  const auto g = count_params(vit_b16(Grouped{}));
  EXPECT_LE(g.unique_params, g.referenced_params);
  EXPECT_EQ(g.referenced_params, count_params(vit_b16()).total_params);
}

TEST(CountParams, TinyTotals) {
  EXPECT_EQ(count_params(tiny_vit()).total_params, 208074u);
  EXPECT_EQ(count_params(tiny_vit(Grouped{})).total_params, 141898u);
  EXPECT_EQ(count_params(tiny_vit(Shallow{})).total_params, 142026u);
}

TEST(CountParams, ClosedFormEqualsWalk) {
  for (const ModelConfig& c : {tiny_vit(), tiny_vit(Grouped{}), tiny_vit(Shallow{}), vit_b16(),
                               vit_b16(Grouped{}), vit_b16(Shallow{}), tiny_vit(Grouped{4}),
                               tiny_vit(Shallow{Ratio{3, 4}})}) {
    const auto closed = count_params(c);
    const auto walked = count_params(init_model<float>(c, 0), c);
    EXPECT_EQ(closed.total_params, walked.total_params) << variant_name(c.variant);
    EXPECT_EQ(closed.mlp_params, walked.mlp_params);
    EXPECT_EQ(closed.unique_mlp_blocks, walked.unique_mlp_blocks);
    EXPECT_EQ(closed.referenced_params, walked.referenced_params);
  }
}

TEST(CountParams, ShallowSavingsFormula) {
  // Halving the hidden width removes d*h' + h' (fc1 rows and bias) and d*h'
  // (fc2 columns) per block, h' = hidden / 2.
  for (const ModelConfig& base : {tiny_vit(), vit_b16()}) {
    ModelConfig shallow = base;
    shallow.variant = Shallow{};
    const std::size_t d = base.embed_dim, h = base.mlp_hidden / 2, L = base.depth;
    EXPECT_EQ(count_params(base).mlp_params - count_params(shallow).mlp_params, L * (2 * d * h + h));
  }
}

TEST(CountFlops, DenseOnlyReproducesTable) {
  const auto b = count_macs(vit_b16());
  EXPECT_EQ(b.total(), 115605504ull + 12ull * (348585984ull + 116195328ull + 929562624ull) + 768000ull);
  EXPECT_NEAR(b.gmacs(), 16.8485, 1e-4);
  EXPECT_EQ(count_macs(vit_b16(Grouped{})).total(), b.total());
  const double s = count_flops(vit_b16(Shallow{}));
  EXPECT_NEAR(s, 11.2711, 1e-4);
  EXPECT_NEAR(s / b.gmacs(), 0.6690, 5e-5);
  EXPECT_LE(std::abs(b.gmacs() - 16.9) / 16.9, 0.005);
  EXPECT_LE(std::abs(s - 11.3) / 11.3, 0.005);
  EXPECT_EQ(format_giga(b.gmacs()), "16.9");
  EXPECT_EQ(format_giga(s), "11.3");
}

TEST(CountFlops, TinyAndFullConvention) {
  EXPECT_EQ(count_macs(tiny_vit()).total(), 12976768u);
  const auto full = count_macs(vit_b16(), FlopConvention::kFull);
  const auto dense = count_macs(vit_b16());
  EXPECT_EQ(full.attn_scores, 12ull * 197 * 197 * 768);
  EXPECT_EQ(full.attn_values, 12ull * 197 * 197 * 768);
  EXPECT_EQ(full.total(), dense.total() + full.attn_scores + full.attn_values);
  EXPECT_EQ(dense.attn_scores, 0u);
}

TEST(Efficiency, ReportedRatios) {
  const auto b = count_params(vit_b16());
  const auto g = count_params(vit_b16(Grouped{}));
  const auto s = count_params(vit_b16(Shallow{}));
  EXPECT_NEAR(efficiency_ratios(g, 81.47).acc_per_mparam, 1.40, 0.01);
  EXPECT_NEAR(efficiency_ratios(s, 81.25).acc_per_mparam, 1.395, 0.01);
  EXPECT_NEAR(efficiency_ratios(b, 81.05).acc_per_mparam, 0.94, 0.01);
  EXPECT_NEAR(efficiency_ratios(s, 81.25).acc_per_gflop, 7.20, 0.05);
  EXPECT_NEAR(efficiency_ratios(b, 81.05).acc_per_gflop, 4.80, 0.05);
  ModelStats unit;
  unit.total_params = 100000000;
  unit.gmacs = 1.0;
  EXPECT_DOUBLE_EQ(efficiency_ratios(unit, 100.0).acc_per_mparam, 1.0);
  const auto r = efficiency_ratios(s, 81.25, 1411.0, 1020.0);
  EXPECT_NEAR(r.throughput_ratio, 1.383, 1e-3);
}

TEST(Memory, Bookkeeping) {
  const auto b = estimate_memory(vit_b16(), 8, true);
  const auto g = estimate_memory(vit_b16(Grouped{}), 8, true);
  EXPECT_NEAR(static_cast<double>(g.param_bytes) / static_cast<double>(b.param_bytes), 0.6727, 5e-5);
  const auto no_ema = estimate_memory(vit_b16(), 8, false);
  EXPECT_EQ(b.total() - no_ema.total(), b.param_bytes);
  EXPECT_EQ(estimate_memory(vit_b16(), 0, true).activation_bytes, 0u);
  EXPECT_EQ(b.optimizer_bytes, 2 * b.param_bytes);
}

TEST(Throughput, RejectsFewIterations) {
  const ModelConfig c = tiny_vit();
  const auto p = init_model<float>(c, 0);
  EXPECT_THROW(measure_throughput(p, c, 2, 0, 2), MeasurementError);
  const auto r = measure_throughput(p, c, 1, 0, 3);
  EXPECT_EQ(r.samples.size(), 3u);
  EXPECT_GT(r.images_per_second, 0.0);
}

TEST(Report, TableAndCsv) {
  std::vector<ModelStats> rows = {count_params(vit_b16()), count_params(vit_b16(Grouped{})),
                                  count_params(vit_b16(Shallow{}))};
  const std::string table = format_stats_table(rows);
  EXPECT_NE(table.find("GroupedMLP   58.2M  28.3M       6    16.9         4x"), std::string::npos) << table;
  const std::string csv = format_stats_csv(rows);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "model,params,unique_mlp,mlp_params,gmacs,expansion");
  EXPECT_NE(csv.find("GroupedMLP,58233064,6,28334592,"), std::string::npos);
}

}  // namespace
}  // namespace vitslim
