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

#include <cmath>
#include <numbers>

#include "test_support.hpp"
#include "vitslim/init.hpp"
#include "vitslim/vit.hpp"

namespace vitslim {
namespace {

double phi(double x) { return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi); }
double Phi(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

// Std of N(0, s^2) truncated to +-k s.
double truncated_std(double s, double k) {
  const double z = Phi(k) - Phi(-k);
  return s * std::sqrt(1.0 - 2.0 * k * phi(k) / z);
}

template <typename T>
void expect_bitwise_equal(const ParamSet<T>& a, const ParamSet<T>& b) {
  ASSERT_EQ(a.entries().size(), b.entries().size());
  for (const auto& e : a.entries()) EXPECT_TRUE(equal(e.tensor, b.at(e.path))) << e.path;
}

TEST(BaseInit, SameSeedSameBuffers) {
  const ModelConfig c = tiny_vit();
  expect_bitwise_equal(base_init<float>(c, 11), base_init<float>(c, 11));
  EXPECT_FALSE(equal(base_init<float>(c, 11).at("mlps.0.fc1.weight"),
                     base_init<float>(c, 12).at("mlps.0.fc1.weight")));
}

TEST(BaseInit, TruncatedNormalMoments) {
  const auto p = base_init<float>(vit_b16(), 0);
  const auto w = p.at("mlps.0.fc1.weight");
  ASSERT_EQ(w.shape(), (Shape{3072, 768}));
  double sum = 0.0, ss = 0.0, peak = 0.0;
  for (float v : w.data()) {
    sum += v;
    ss += static_cast<double>(v) * v;
    peak = std::max(peak, std::abs(static_cast<double>(v)));
  }
  const double n = static_cast<double>(w.numel());
  const double std = std::sqrt(ss / n - (sum / n) * (sum / n));
  const double expect = truncated_std(0.02, 2.0);
  EXPECT_NEAR(expect, 0.017593, 1e-5);
  EXPECT_NEAR(std, expect, 0.03 * expect);
  EXPECT_LE(peak, 0.04 + 1e-7);
}

TEST(BaseInit, HeadZeroAndBiasesZero) {
  const auto p = base_init<float>(tiny_vit(), 3);
  for (float v : p.at("head.weight").data()) EXPECT_EQ(v, 0.0f);
  for (float v : p.at("head.bias").data()) EXPECT_EQ(v, 0.0f);
  for (float v : p.at("mlps.1.fc1.bias").data()) EXPECT_EQ(v, 0.0f);
}

TEST(BaseInit, FullWidthRegardlessOfVariant) {
  const auto p = base_init<float>(tiny_vit(Shallow{}), 3);
  EXPECT_EQ(p.at("mlps.0.fc1.weight").shape(), (Shape{256, 64}));
  expect_bitwise_equal(p, base_init<float>(tiny_vit(), 3));
}

TEST(GroupedSharing, ScalesThreeTensorsAndKeepsFc2Bias) {
  ParamSet<double> base = base_init<double>(tiny_vit(), 0);
  for (std::size_t b = 0; b < 4; ++b) {
    base.at(mlp_storage_path(b, MlpPart::kFc1Weight))[0] = 1.0;
    for (double& v : base.at(mlp_storage_path(b, MlpPart::kFc1Bias)).data()) v = 0.5;
    for (double& v : base.at(mlp_storage_path(b, MlpPart::kFc2Bias)).data()) v = 0.3;
  }
  const auto g = apply_grouped_sharing(base, 2);
  EXPECT_EQ(g.at("mlps.0.fc1.weight")[0], 0.7071067811865476);
  EXPECT_EQ(g.at("mlps.1.fc1.bias")[0], 0.5 * kSharedMlpScale);
  EXPECT_EQ(g.at("mlps.1.fc2.bias")[0], 0.3);
  EXPECT_FALSE(g.contains("mlps.2.fc1.weight"));
}

TEST(GroupedSharing, MapForTwelveBlocks) {
  const auto g = apply_grouped_sharing(base_init<float>(vit_b16(), 0), 2);
  EXPECT_EQ(g.sharing_map(), (std::vector<std::size_t>{0, 0, 1, 1, 2, 2, 3, 3, 4, 4, 5, 5}));
  EXPECT_EQ(g.unique_mlp_count(), 6u);
}

TEST(GroupedSharing, ElementwiseScaledBaseline) {
  const ModelConfig c = tiny_vit(Grouped{});
  const auto base = init_model<float>(tiny_vit(), 21);
  const auto grouped = init_model<float>(c, 21);
  const float k = static_cast<float>(kSharedMlpScale);
  for (std::size_t i = 0; i < c.depth / 2; ++i) {
    for (MlpPart part : kMlpParts) {
      const auto b = base.mlp(2 * i, part);
      const auto s = grouped.mlp(2 * i, part);
      ASSERT_EQ(b.numel(), s.numel());
      for (std::size_t j = 0; j < b.numel(); ++j) {
        const float expect = part == MlpPart::kFc2Bias ? b[j] : b[j] * k;
        ASSERT_EQ(s[j], expect) << mlp_part_name(part) << " " << j;
      }
    }
  }
}

TEST(GroupedSharing, IndivisibleDepthAndRepeatAreRejected) {
  const auto base = base_init<float>(tiny_vit(), 0);
  EXPECT_THROW(apply_grouped_sharing(base, 3), ConfigError);
  const auto once = apply_grouped_sharing(base, 2);
  EXPECT_THROW(apply_grouped_sharing(once, 2), ContractError);
  EXPECT_THROW(slice_shallow(once, Ratio{1, 2}), ContractError);
}

TEST(GroupedSharing, PreActivationVarianceHalves) {
  const auto base = base_init<double>(tiny_vit(), 5);
  const auto shared = apply_grouped_sharing(base, 2);
  const auto x = testing::randn({256, 64}, 6);
  auto var = [&](const ParamSet<double>& p) {
    Graph<double> g(false);
    const auto y = ops::linear(g, x, p.mlp(0, MlpPart::kFc1Weight), p.mlp(0, MlpPart::kFc1Bias));
    double s = 0.0, ss = 0.0;
    for (double v : y.data()) {
      s += v;
      ss += v * v;
    }
    const double n = static_cast<double>(y.numel());
    return ss / n - (s / n) * (s / n);
  };
  EXPECT_NEAR(var(shared) / var(base), 0.5, 0.025);
}

TEST(ShallowSlice, LeadingRowsAndColumns) {
  const auto base = init_model<float>(tiny_vit(), 31);
  const auto shallow = init_model<float>(tiny_vit(Shallow{}), 31);
  for (std::size_t b = 0; b < 4; ++b) {
    const auto f1 = base.mlp(b, MlpPart::kFc1Weight), s1 = shallow.mlp(b, MlpPart::kFc1Weight);
    ASSERT_EQ(s1.shape(), (Shape{128, 64}));
    for (std::size_t i = 0; i < s1.numel(); ++i) ASSERT_EQ(s1[i], f1[i]);
    const auto f2 = base.mlp(b, MlpPart::kFc2Weight), s2 = shallow.mlp(b, MlpPart::kFc2Weight);
    ASSERT_EQ(s2.shape(), (Shape{64, 128}));
    for (std::size_t r = 0; r < 64; ++r) {
      for (std::size_t col = 0; col < 128; ++col) ASSERT_EQ(s2[r * 128 + col], f2[r * 256 + col]);
    }
    EXPECT_EQ(shallow.mlp(b, MlpPart::kFc1Bias).numel(), 128u);
    EXPECT_TRUE(equal(shallow.mlp(b, MlpPart::kFc2Bias), base.mlp(b, MlpPart::kFc2Bias)));
  }
}

TEST(ShallowSlice, VitB16Shape) {
  const auto p = slice_shallow(base_init<float>(vit_b16(), 0), Ratio{1, 2});
  EXPECT_EQ(p.at("mlps.11.fc1.weight").shape(), (Shape{1536, 768}));
  EXPECT_EQ(p.at("mlps.11.fc2.weight").shape(), (Shape{768, 1536}));
}

TEST(ShallowSlice, RatioOneIsIdentity) {
  const auto base = base_init<float>(tiny_vit(), 2);
  const auto same = slice_shallow(base, Ratio{1, 1});
  expect_bitwise_equal(base, same);
}

TEST(ShallowSlice, NonIntegralWidthRejected) {
  EXPECT_THROW(slice_shallow(base_init<float>(tiny_vit(), 2), Ratio{1, 3}), ConfigError);
  EXPECT_THROW(slice_shallow(slice_shallow(base_init<float>(tiny_vit(), 2), Ratio{1, 2}), Ratio{1, 2}),
               ContractError);
}

TEST(ShallowSlice, TinyCount) {
  const auto p = init_model<float>(tiny_vit(Shallow{}), 0);
  EXPECT_EQ(p.unique_param_count(), 142026u);
}

TEST(InitSpec, NonPositiveStdRejected) {
  InitSpec s;
  s.weight_std = 0.0;
  EXPECT_THROW(base_init<float>(tiny_vit(), 0, s), ConfigError);
}

}  // namespace
}  // namespace vitslim
