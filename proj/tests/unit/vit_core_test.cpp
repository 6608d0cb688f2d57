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
#include <sstream>

#include "test_support.hpp"
#include "vitslim/accounting.hpp"
#include "vitslim/checkpoint.hpp"
#include "vitslim/init.hpp"
#include "vitslim/vit.hpp"

namespace vitslim {
namespace {

using testing::exhaustive;
using testing::probe_loss;
using testing::randn;

Tensor<float> images_for(const ModelConfig& c, std::size_t b, std::uint64_t seed) {
  Tensor<float> t(Shape{b, c.in_channels, c.image_size, c.image_size});
  Rng rng = make_rng(seed, Stream::kTest);
  for (float& v : t.data()) v = static_cast<float>(standard_normal(rng));
  return t;
}

InitSpec live_head() {
  InitSpec s;
  s.zero_head = false;
  return s;
}

TEST(ModelConfig, InvariantsAreEnforced) {
  ModelConfig c = tiny_vit();
  EXPECT_EQ(c.tokens(), 65u);
  c.patch_size = 5;
  EXPECT_THROW(validate(c), ConfigError);
  c = tiny_vit();
  c.num_heads = 3;
  EXPECT_THROW(validate(c), ConfigError);
  c = tiny_vit(Grouped{3});
  EXPECT_THROW(validate(c), ConfigError);
  c = tiny_vit(Shallow{Ratio{1, 3}});
  EXPECT_THROW(validate(c), ConfigError);
  c = tiny_vit(Shallow{Ratio{3, 2}});
  EXPECT_THROW(validate(c), ConfigError);
  EXPECT_NO_THROW(validate(tiny_vit(Shallow{Ratio{3, 4}})));
}

TEST(BuildModel, ParamCountsMatchClosedForm) {
  EXPECT_EQ(build_model<float>(tiny_vit(), 0).stats.total_params, 208074u);
  EXPECT_EQ(build_model<float>(tiny_vit(Grouped{}), 0).stats.total_params, 141898u);
  EXPECT_EQ(build_model<float>(tiny_vit(Shallow{}), 0).stats.total_params, 142026u);
}

TEST(BuildModel, VitB16Counts) {
  const auto b = build_model<float>(vit_b16(), 0);
  EXPECT_EQ(b.stats.total_params, 86567656u);
  const auto g = build_model<float>(vit_b16(Grouped{}), 0);
  EXPECT_EQ(g.stats.total_params, 58233064u);
  EXPECT_EQ(g.stats.unique_mlp_blocks, 6u);
  EXPECT_EQ(count_params(g.params, vit_b16(Grouped{})).total_params, count_params(vit_b16(Grouped{})).total_params);
}

TEST(BuildModel, InvalidConfigIsConfigError) {
  EXPECT_THROW(build_model<float>(tiny_vit(Grouped{3}), 0), ConfigError);
}

TEST(Forward, LogitShape) {
  const ModelConfig c = tiny_vit();
  const auto m = build_model<float>(c, 1);
  Graph<float> g(false);
  const auto logits = forward(g, m.params, c, images_for(c, 2, 0), Mode::kEval);
  EXPECT_EQ(logits.shape(), (Shape{2, 10}));
}

TEST(Forward, WrongImageSizeIsDimensionError) {
  const ModelConfig c = tiny_vit();
  const auto m = build_model<float>(c, 1);
  Graph<float> g(false);
  EXPECT_THROW(forward(g, m.params, c, Tensor<float>(Shape{1, 3, 16, 16}), Mode::kEval), DimensionError);
}

TEST(Forward, EvalIsDeterministicAndConsumesNoRandomness) {
  const ModelConfig c = tiny_vit(Grouped{});
  const auto m = build_model<float>(c, 2, live_head());
  const auto x = images_for(c, 3, 1);
  Rng rng = make_rng(9, Stream::kTest);
  const Rng before = rng;
  Graph<float> g(false);
  const auto a = forward(g, m.params, c, x, Mode::kEval, &rng);
  const auto b = forward(g, m.params, c, x, Mode::kEval, &rng);
  EXPECT_TRUE(equal(a, b));
  EXPECT_TRUE(rng == before);
}

TEST(Forward, SharedStoragePerturbationReachesBothBlocks) {
  const ModelConfig c = tiny_vit(Grouped{});
  const auto m = build_model<float>(c, 3, live_head());
  const auto x = images_for(c, 2, 2);
  Graph<float> g(false);
  ActivationProbe<float> before, after;
  forward(g, m.params, c, x, Mode::kEval, nullptr, &before);
  ParamSet<float> p = m.params.clone();
  Tensor<float> w = p.at("mlps.0.fc1.weight");
  for (float& v : w.data()) v += 0.05f;
  // Block 1 reads the same storage as block 0.
  EXPECT_TRUE(p.mlp(1, MlpPart::kFc1Weight).same_storage(w));
  Graph<float> g2(false);
  forward(g2, p, c, x, Mode::kEval, nullptr, &after);
  EXPECT_FALSE(equal(before.block_outputs[0], after.block_outputs[0]));
  // Block 1's own MLP read changes too, on a fixed input.
  const Tensor<float> mlp_in = before.block_outputs[0];
  auto mlp_out = [&](const ParamSet<float>& ps) {
    Graph<float> gg(false);
    return mlp_forward(gg, mlp_in, ps.mlp(1, MlpPart::kFc1Weight), ps.mlp(1, MlpPart::kFc1Bias),
                       ps.mlp(1, MlpPart::kFc2Weight), ps.mlp(1, MlpPart::kFc2Bias));
  };
  EXPECT_FALSE(equal(mlp_out(m.params), mlp_out(p)));
}

TEST(Attention, SingleTokenOutputsProjectedValue) {
  const std::size_t d = 4;
  const auto x = randn({2, 1, d}, 1);
  const auto wqkv = randn({3 * d, d}, 2), bqkv = randn({3 * d}, 3);
  const auto wp = randn({d, d}, 4), bp = randn({d}, 5);
  Graph<double> g(false);
  const auto y = attention(g, x, wqkv, bqkv, wp, bp, 2);
  // v = x Wv^T + bv, out = v Wp^T + bp
  for (std::size_t b = 0; b < 2; ++b) {
    for (std::size_t o = 0; o < d; ++o) {
      double expect = bp[o];
      for (std::size_t j = 0; j < d; ++j) {
        double v = bqkv[2 * d + j];
        for (std::size_t k = 0; k < d; ++k) v += wqkv[(2 * d + j) * d + k] * x[b * d + k];
        expect += wp[o * d + j] * v;
      }
      EXPECT_NEAR(y[b * d + o], expect, 1e-12);
    }
  }
}

TEST(Attention, PermutingTokensPermutesOutputs) {
  const std::size_t t = 5, d = 8;
  const auto x = randn({1, t, d}, 6);
  const auto wqkv = randn({3 * d, d}, 7, 0.3), bqkv = randn({3 * d}, 8);
  const auto wp = randn({d, d}, 9), bp = randn({d}, 10);
  const std::vector<std::size_t> perm = {0, 3, 1, 4, 2};
  Tensor<double> xp(Shape{1, t, d});
  for (std::size_t i = 0; i < t; ++i) {
    for (std::size_t k = 0; k < d; ++k) xp[i * d + k] = x[perm[i] * d + k];
  }
  Graph<double> g(false);
  const auto y = attention(g, x, wqkv, bqkv, wp, bp, 2);
  const auto yp = attention(g, xp, wqkv, bqkv, wp, bp, 2);
  for (std::size_t i = 0; i < t; ++i) {
    for (std::size_t k = 0; k < d; ++k) EXPECT_NEAR(yp[i * d + k], y[perm[i] * d + k], 1e-12);
  }
}

TEST(Attention, ZeroQkvGivesProjectionBias) {
  const std::size_t d = 6;
  const auto x = randn({2, 3, d}, 11);
  const auto bp = randn({d}, 12);
  Graph<double> g(false);
  const auto y = attention(g, x, Tensor<double>(Shape{3 * d, d}), Tensor<double>(Shape{3 * d}),
                           randn({d, d}, 13), bp, 3);
  for (std::size_t i = 0; i < y.numel(); ++i) EXPECT_DOUBLE_EQ(y[i], bp[i % d]);
}

TEST(Attention, GradientsMatchFiniteDifferences) {
  const std::size_t d = 4;
  const auto x = randn({2, 3, d}, 14);
  const auto wqkv = randn({3 * d, d}, 15), bqkv = randn({3 * d}, 16);
  const auto wp = randn({d, d}, 17), bp = randn({d}, 18);
  const auto report = gradcheck(
      [&](Graph<double>& g) { return probe_loss(g, attention(g, x, wqkv, bqkv, wp, bp, 2), 3); },
      {{"x", x}, {"qkv.weight", wqkv}, {"qkv.bias", bqkv}, {"proj.weight", wp}, {"proj.bias", bp}},
      exhaustive());
  EXPECT_TRUE(report.pass()) << report.format();
}

TEST(Mlp, ZeroWeightsGiveConstantBias) {
  const std::size_t d = 4, h = 8;
  const auto b2 = Tensor<double>::full({d}, 0.25);
  Graph<double> g(false);
  const auto y = mlp_forward(g, randn({2, 3, d}, 1), Tensor<double>(Shape{h, d}), randn({h}, 2),
                             Tensor<double>(Shape{d, h}), b2);
  for (double v : y.data()) EXPECT_DOUBLE_EQ(v, 0.25);
}

TEST(Mlp, AcceptsDifferentHiddenWidths) {
  const std::size_t d = 4;
  for (std::size_t h : {d, 2 * d}) {
    Graph<double> g(false);
    const auto y = mlp_forward(g, randn({1, 2, d}, 3), randn({h, d}, 4), randn({h}, 5), randn({d, h}, 6), randn({d}, 7));
    EXPECT_EQ(y.shape(), (Shape{1, 2, d}));
  }
  Graph<double> g(false);
  EXPECT_THROW(mlp_forward(g, randn({1, 2, d}, 3), randn({8, d}, 4), randn({8}, 5), randn({d, 6}, 6), randn({d}, 7)),
               DimensionError);
}

TEST(Mlp, GradientsMatchFiniteDifferences) {
  const std::size_t d = 4, h = 8;
  const auto x = randn({2, 3, d}, 20), w1 = randn({h, d}, 21), b1 = randn({h}, 22);
  const auto w2 = randn({d, h}, 23), b2 = randn({d}, 24);
  const auto report = gradcheck(
      [&](Graph<double>& g) { return probe_loss(g, mlp_forward(g, x, w1, b1, w2, b2), 5); },
      {{"x", x}, {"fc1.weight", w1}, {"fc1.bias", b1}, {"fc2.weight", w2}, {"fc2.bias", b2}}, exhaustive());
  EXPECT_TRUE(report.pass()) << report.format();
}

TEST(DropPath, IdentityCases) {
  const auto x = randn({4, 3}, 30);
  Graph<double> g(false);
  Rng rng = make_rng(1, Stream::kTest);
  EXPECT_TRUE(equal(drop_path(g, x, 0.0, Mode::kTrain, &rng), x));
  EXPECT_TRUE(equal(drop_path(g, x, 0.5, Mode::kEval, &rng), x));
  EXPECT_THROW(drop_path(g, x, 1.0, Mode::kTrain, &rng), ConfigError);
}

TEST(DropPath, InvertedScalingPreservesMean) {
  const std::size_t n = 100000;
  const auto x = Tensor<double>::full({n, 1}, 1.0);
  Graph<double> g(false);
  Rng rng = make_rng(2, Stream::kTest);
  const auto y = drop_path(g, x, 0.1, Mode::kTrain, &rng);
  double sum = 0.0;
  for (double v : y.data()) {
    EXPECT_TRUE(v == 0.0 || std::abs(v - 1.0 / 0.9) < 1e-12);
    sum += v;
  }
  EXPECT_NEAR(sum / static_cast<double>(n), 1.0, 0.01);
}

TEST(Sharing, GroupedMapAndAliasing) {
  const auto m = build_model<float>(vit_b16(Grouped{}), 0);
  const std::vector<std::size_t> expect = {0, 0, 1, 1, 2, 2, 3, 3, 4, 4, 5, 5};
  EXPECT_EQ(m.params.sharing_map(), expect);
  EXPECT_EQ(m.params.unique_mlp_count(), 6u);
  for (std::size_t i = 0; i < 6; ++i) {
    for (MlpPart part : kMlpParts) {
      EXPECT_TRUE(m.params.mlp(2 * i, part).same_storage(m.params.mlp(2 * i + 1, part)));
    }
  }
  EXPECT_TRUE(m.params.at("blocks.3.mlp.fc2.weight").same_storage(m.params.at("mlps.1.fc2.weight")));
  EXPECT_EQ(build_model<float>(vit_b16(), 0).params.unique_mlp_count(), 12u);
  EXPECT_EQ(build_model<float>(vit_b16(Shallow{}), 0).params.unique_mlp_count(), 12u);
}

TEST(Sharing, SharedGradientEqualsSumOfIsolatedGradients) {
  const ModelConfig c = tiny_vit(Grouped{});
  const auto params = init_model<double>(c, 4, live_head());
  const auto batch = random_batch(c, 2, 4);
  const auto checks = check_shared_decomposition(params, c, batch);
  ASSERT_EQ(checks.size(), 8u);
  for (const auto& s : checks) EXPECT_LE(s.max_abs_diff, 1e-10) << s.storage;

  // The gradients being compared are not trivially zero.
  ParamSet<double> p = params.clone();
  p.set_requires_grad(true);
  Graph<double> g;
  g.backward(ops::soft_cross_entropy(g, forward(g, p, c, batch.images, Mode::kEval),
                                     soft_targets(batch, c.num_classes)));
  double norm = 0.0;
  for (double v : p.at("mlps.0.fc1.weight").grad()) norm += v * v;
  EXPECT_GT(norm, 1e-12);
}

TEST(Checkpoint, RoundTripKeepsSharingAndValues) {
  const ModelConfig c = tiny_vit(Grouped{});
  const auto m = build_model<float>(c, 5, live_head());
  std::stringstream buf;
  write_checkpoint(buf, c, m.params);
  const std::string bytes = buf.str();
  ASSERT_EQ(bytes.substr(0, 4), "VSLM");
  const auto ck = read_checkpoint<float>(buf);
  EXPECT_EQ(ck.config, c);
  EXPECT_EQ(ck.params.sharing_map(), m.params.sharing_map());
  EXPECT_EQ(ck.params.entries().size(), m.params.entries().size());
  for (const auto& e : m.params.entries()) EXPECT_TRUE(equal(ck.params.at(e.path), e.tensor)) << e.path;
  EXPECT_TRUE(ck.params.mlp(0, MlpPart::kFc1Weight).same_storage(ck.params.mlp(1, MlpPart::kFc1Weight)));
  std::size_t mlp_storages = 0;
  for (const auto& e : ck.params.entries()) mlp_storages += e.path.ends_with("fc1.weight") ? 1 : 0;
  EXPECT_EQ(mlp_storages, c.depth / 2);
}

TEST(Checkpoint, CorruptHeaderIsRejected) {
  std::stringstream buf("XXXXgarbage");
  EXPECT_THROW(read_checkpoint<float>(buf), FormatError);
}

}  // namespace
}  // namespace vitslim
