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

#include <benchmark/benchmark.h>

#include "vitslim/accounting.hpp"
#include "vitslim/graph.hpp"
#include "vitslim/init.hpp"
#include "vitslim/model_config.hpp"
#include "vitslim/ops.hpp"
#include "vitslim/rng.hpp"
#include "vitslim/vit.hpp"

namespace vitslim {
namespace {

Tensor<float> random_images(const ModelConfig& c, std::size_t batch) {
  Tensor<float> x(Shape{batch, c.in_channels, c.image_size, c.image_size});
  Rng rng = make_rng(0, Stream::kBench);
  for (float& v : x.data()) v = static_cast<float>(standard_normal(rng));
  return x;
}

// Eval-mode forward. Arg 0 selects the variant; depth is cut to 2 at d = 768.
void BM_Forward(benchmark::State& state, ModelConfig config) {
  const std::size_t batch = static_cast<std::size_t>(state.range(0));
  const ParamSet<float> params = init_model<float>(config, 0);
  const Tensor<float> x = random_images(config, batch);
  for (auto _ : state) {
    Graph<float> g(false);
    benchmark::DoNotOptimize(forward(g, params, config, x, Mode::kEval).data().data());
  }
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * batch));
  state.counters["GMACs/img"] = count_macs(config).gmacs();
}

ModelConfig wide(MLPVariant v) {
  ModelConfig c = vit_b16(v);
  c.depth = 2;
  return c;
}

BENCHMARK_CAPTURE(BM_Forward, tiny_baseline, tiny_vit())->Arg(32)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_Forward, tiny_grouped, tiny_vit(Grouped{}))->Arg(32)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_Forward, tiny_shallow, tiny_vit(Shallow{}))->Arg(32)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_Forward, d768_baseline, wide(Baseline{}))->Arg(4)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_Forward, d768_grouped, wide(Grouped{}))->Arg(4)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_Forward, d768_shallow, wide(Shallow{}))->Arg(4)->Unit(benchmark::kMillisecond);

void BM_Matmul(benchmark::State& state) {
  const std::size_t n = static_cast<std::size_t>(state.range(0));
  Tensor<float> a(Shape{n, n}), b(Shape{n, n});
  Rng rng = make_rng(1, Stream::kBench);
  for (float& v : a.data()) v = static_cast<float>(standard_normal(rng));
  for (float& v : b.data()) v = static_cast<float>(standard_normal(rng));
  for (auto _ : state) {
    Graph<float> g(false);
    benchmark::DoNotOptimize(ops::matmul(g, a, b).data().data());
  }
  state.counters["GFLOP/s"] = benchmark::Counter(2.0 * static_cast<double>(n * n * n),
                                                 benchmark::Counter::kIsIterationInvariantRate,
                                                 benchmark::Counter::kIs1000);
}
BENCHMARK(BM_Matmul)->Arg(128)->Arg(512)->Arg(768);

}  // namespace
}  // namespace vitslim

BENCHMARK_MAIN();
