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

// One PASS/FAIL line per acceptance criterion. Exit status is nonzero when
// any criterion fails.

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "../unit/test_support.hpp"
#include "vitslim/accounting.hpp"
#include "vitslim/checkpoint.hpp"
#include "vitslim/data.hpp"
#include "vitslim/gradcheck.hpp"
#include "vitslim/init.hpp"
#include "vitslim/metrics.hpp"
#include "vitslim/model_config.hpp"
#include "vitslim/ops.hpp"
#include "vitslim/runtime.hpp"
#include "vitslim/train.hpp"
#include "vitslim/vit.hpp"

namespace fs = std::filesystem;
using namespace vitslim;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

int failures = 0;

void report(int id, bool pass, const std::string& detail) {
  std::printf("%s criterion %d: %s\n", pass ? "PASS" : "FAIL", id, detail.c_str());
  std::fflush(stdout);
  if (!pass) ++failures;
}

bool near(double a, double b, double tol) { return std::abs(a - b) <= tol; }

void criterion1() {
  const ModelStats b = count_params(vit_b16());
  const ModelStats g = count_params(vit_b16(Grouped{}));
  const ModelStats s = count_params(vit_b16(Shallow{}));
  bool ok = b.total_params == 86567656 && g.total_params == 58233064 && s.total_params == 58237672;
  ok = ok && b.mlp_params == 56669184 && g.mlp_params == 28334592 && s.mlp_params == 28339200;
  ok = ok && b.unique_mlp_blocks == 12 && g.unique_mlp_blocks == 6 && s.unique_mlp_blocks == 12;
  ok = ok && format_millions(b.total_params) == "86.6M" && format_millions(g.total_params) == "58.2M" &&
       format_millions(s.total_params) == "58.2M";
  ok = ok && format_millions(b.mlp_params) == "56.7M" && format_millions(g.mlp_params) == "28.3M" &&
       format_millions(s.mlp_params) == "28.3M";
  const double red = g.reduction_fraction(b);
  ok = ok && near(red, 0.327, 0.001);
  report(1, ok,
         "params " + std::to_string(b.total_params) + "/" + std::to_string(g.total_params) + "/" +
             std::to_string(s.total_params) + ", mlp " + std::to_string(b.mlp_params) + "/" +
             std::to_string(g.mlp_params) + "/" + std::to_string(s.mlp_params) + ", unique " +
             std::to_string(b.unique_mlp_blocks) + "/" + std::to_string(g.unique_mlp_blocks) + "/" +
             std::to_string(s.unique_mlp_blocks) + ", reduction " + fmt("%.4f", red));
}

void criterion2() {
  const double b = count_macs(vit_b16()).gmacs();
  const double g = count_macs(vit_b16(Grouped{})).gmacs();
  const double s = count_macs(vit_b16(Shallow{})).gmacs();
  const bool ok = b == g && std::abs(b / 16.9 - 1.0) <= 0.005 && std::abs(s / 11.3 - 1.0) <= 0.005 &&
                  format_giga(b) == "16.9" && format_giga(s) == "11.3";
  report(2, ok, "GMACs " + fmt("%.4f", b) + "/" + fmt("%.4f", g) + "/" + fmt("%.4f", s));
}

void criterion3() {
  const auto b = efficiency_ratios(count_params(vit_b16()), 81.05);
  const auto g = efficiency_ratios(count_params(vit_b16(Grouped{})), 81.47);
  const auto s = efficiency_ratios(count_params(vit_b16(Shallow{})), 81.25);
  const bool ok = near(g.acc_per_mparam, 1.40, 0.01) && s.acc_per_mparam >= 1.39 - 0.01 &&
                  s.acc_per_mparam <= 1.40 + 0.01 && near(b.acc_per_mparam, 0.94, 0.01) &&
                  near(s.acc_per_gflop, 7.20, 0.05) && near(b.acc_per_gflop, 4.80, 0.05);
  report(3, ok,
         "acc/Mparam " + fmt("%.3f", b.acc_per_mparam) + "/" + fmt("%.3f", g.acc_per_mparam) + "/" +
             fmt("%.3f", s.acc_per_mparam) + ", acc/GMAC shallow " + fmt("%.3f", s.acc_per_gflop) +
             " baseline " + fmt("%.3f", b.acc_per_gflop));
}

void criterion4() {
  const std::uint64_t seed = 1234;
  const ParamSet<float> base = init_model<float>(vit_b16(), seed);
  const ParamSet<float> grouped = init_model<float>(vit_b16(Grouped{}), seed);
  const float k = static_cast<float>(1.0 / std::sqrt(2.0));
  bool ok = grouped.unique_mlp_count() == 6;
  std::size_t checked = 0;
  for (std::size_t i = 0; i < 6; ++i) {
    for (MlpPart part : kMlpParts) {
      const Tensor<float> b = base.mlp(2 * i, part), g = grouped.mlp(2 * i, part);
      ok = ok && g.same_storage(grouped.mlp(2 * i + 1, part)) && b.numel() == g.numel();
      if (!ok) break;
      for (std::size_t j = 0; j < b.numel(); ++j) {
        const float expect = part == MlpPart::kFc2Bias ? b[j] : b[j] * k;
        ok = ok && g[j] == expect;
      }
      checked += b.numel();
    }
  }
  report(4, ok, "grouped MLP equals 1/sqrt(2) x baseline (fc2 bias unscaled) over " +
                    std::to_string(checked) + " elements, seed " + std::to_string(seed));
}

void criterion5() {
  const std::uint64_t seed = 1234;
  const ParamSet<float> base = init_model<float>(vit_b16(), seed);
  const ParamSet<float> shallow = init_model<float>(vit_b16(Shallow{}), seed);
  bool ok = true;
  std::size_t checked = 0;
  for (std::size_t b = 0; b < 12 && ok; ++b) {
    const Tensor<float> f1 = base.mlp(b, MlpPart::kFc1Weight), s1 = shallow.mlp(b, MlpPart::kFc1Weight);
    const Tensor<float> f2 = base.mlp(b, MlpPart::kFc2Weight), s2 = shallow.mlp(b, MlpPart::kFc2Weight);
    ok = s1.shape() == Shape{1536, 768} && s2.shape() == Shape{768, 1536};
    for (std::size_t i = 0; ok && i < s1.numel(); ++i) ok = s1[i] == f1[i];
    for (std::size_t r = 0; ok && r < 768; ++r) {
      for (std::size_t c = 0; c < 1536; ++c) ok = ok && s2[r * 1536 + c] == f2[r * 3072 + c];
    }
    checked += s1.numel() + s2.numel();
  }
  report(5, ok, "shallow fc1 = leading rows, fc2 = leading columns of baseline over " +
                    std::to_string(checked) + " elements");
}

void criterion6() {
  using V = std::vector<Tensor<double>>;
  using testing::probe_loss;
  using testing::randn;
  const auto t0 = Clock::now();
  struct Case {
    const char* name;
    std::vector<Shape> shapes;
    std::function<Tensor<double>(Graph<double>&, const V&)> fn;
  };
  static const std::array<std::size_t, 3> kPerm = {2, 0, 1};
  const std::vector<Case> cases = {
      {"matmul", {{3, 4}, {4, 5}}, [](Graph<double>& g, const V& x) { return ops::matmul(g, x[0], x[1]); }},
      {"linear", {{2, 3, 4}, {5, 4}, {5}},
       [](Graph<double>& g, const V& x) { return ops::linear(g, x[0], x[1], x[2]); }},
      {"batched_matmul", {{2, 3, 4}, {2, 4, 5}},
       [](Graph<double>& g, const V& x) { return ops::batched_matmul(g, x[0], x[1]); }},
      {"batched_matmul_t", {{2, 3, 4}, {2, 5, 4}},
       [](Graph<double>& g, const V& x) { return ops::batched_matmul(g, x[0], x[1], true); }},
      {"add", {{2, 3, 4}, {3, 4}}, [](Graph<double>& g, const V& x) { return ops::add(g, x[0], x[1]); }},
      {"mul", {{3, 5}, {3, 5}}, [](Graph<double>& g, const V& x) { return ops::mul(g, x[0], x[1]); }},
      {"scale", {{4, 3}}, [](Graph<double>& g, const V& x) { return ops::scale(g, x[0], -1.75); }},
      {"gelu", {{5, 6}}, [](Graph<double>& g, const V& x) { return ops::gelu(g, x[0]); }},
      {"layer_norm", {{3, 2, 6}, {6}, {6}},
       [](Graph<double>& g, const V& x) { return ops::layer_norm(g, x[0], x[1], x[2]); }},
      {"softmax", {{2, 3, 5}}, [](Graph<double>& g, const V& x) { return ops::softmax(g, x[0]); }},
      {"reshape", {{2, 3, 4}}, [](Graph<double>& g, const V& x) { return ops::reshape(g, x[0], Shape{6, 4}); }},
      {"permute", {{2, 3, 4}},
       [](Graph<double>& g, const V& x) { return ops::permute(g, x[0], std::span<const std::size_t>(kPerm)); }},
      {"select", {{3, 2, 4}}, [](Graph<double>& g, const V& x) { return ops::select(g, x[0], 1, 1); }},
      {"prepend_token", {{2, 3, 4}, {4}},
       [](Graph<double>& g, const V& x) { return ops::prepend_token(g, x[0], x[1]); }},
      {"scale_samples", {{3, 2, 2}},
       [](Graph<double>& g, const V& x) {
         const std::vector<double> f = {0.0, 1.25, -2.0};
         return ops::scale_samples(g, x[0], std::span<const double>(f));
       }},
      {"mean", {{3, 4}}, [](Graph<double>& g, const V& x) { return ops::mean(g, x[0]); }},
      {"soft_cross_entropy", {{4, 5}},
       [](Graph<double>& g, const V& x) {
         Tensor<double> t(Shape{4, 5});
         for (std::size_t b = 0; b < 4; ++b) {
           t[b * 5 + b] = 0.7;
           t[b * 5 + (b + 2) % 5] = 0.3;
         }
         return ops::soft_cross_entropy(g, x[0], t);
       }},
      {"drop_path", {{4, 3, 2}},
       [](Graph<double>& g, const V& x) {
         Rng rng = make_rng(3, Stream::kTest, {7});
         return drop_path(g, x[0], 0.5, Mode::kTrain, &rng);
       }},
  };
  bool ok = true;
  std::string failed;
  for (const Case& c : cases) {
    V inputs;
    std::vector<NamedTensor> named;
    for (std::size_t i = 0; i < c.shapes.size(); ++i) {
      inputs.push_back(randn(c.shapes[i], 17 + i));
      named.push_back({std::string(c.name) + "#" + std::to_string(i), inputs.back()});
    }
    const auto r = gradcheck([&](Graph<double>& g) { return probe_loss(g, c.fn(g, inputs), 5); }, named,
                             testing::exhaustive());
    if (!r.pass()) {
      ok = false;
      failed += " " + std::string(c.name);
    }
  }

  // Full tiny model in every variant, 64-bit. Grouped also exercises the
  // shared storages.
  std::size_t tensors = 0;
  double worst = 0.0, shared = 0.0;
  for (const MLPVariant& v : {MLPVariant{Baseline{}}, MLPVariant{Grouped{}}, MLPVariant{Shallow{}}}) {
    ModelConfig m = tiny_vit(v);
    m.drop_path_rate = 0.0;
    InitSpec init;
    init.zero_head = false;
    const ParamSet<double> params = init_model<double>(m, 3, init);
    const Batch<double> batch = random_batch(m, 1, 3);
    GradCheckOptions opt;
    opt.seed = 3;
    const GradCheckReport model = gradcheck_model(params, m, batch, opt);
    tensors += model.groups.size();
    for (const GroupCheck& gc : model.groups) worst = std::max(worst, gc.max_rel_error);
    if (!model.pass()) {
      ok = false;
      failed += " " + variant_display(v);
    }
    for (const SharedGradCheck& s : check_shared_decomposition(params, m, batch)) {
      shared = std::max(shared, s.max_abs_diff);
    }
  }
  ok = ok && shared <= 1e-10;
  const double secs = seconds_since(t0);
  ok = ok && secs < 60.0;
  report(6, ok,
         std::to_string(cases.size()) + " ops + 3 tiny models (" + std::to_string(tensors) +
             " tensors, worst rel err " + fmt("%.2e", worst) + ") at tol 1e-4, shared-sum max diff " +
             fmt("%.1e", shared) + ", " + fmt("%.1f", secs) + " s" + (failed.empty() ? "" : ", failed:" + failed));
}

void criterion7(const fs::path& work) {
  const ModelConfig m = tiny_vit(Grouped{});
  SynthSpec spec;
  spec.per_class = 20;
  spec.seed = 7;
  const auto [train_set, val_set] = split_holdout(synth_dataset(spec), 0.2);
  TrainConfig tc = smoke_train_config();
  tc.batch_size = 16;  // 160 images -> 10 steps per epoch
  tc.epochs = 10;
  tc.warmup_epochs = 1;
  tc.log_timing = false;
  TrainOptions opt;
  opt.out_dir = work / "sharing";
  std::size_t steps = 0;
  opt.on_step = [&](std::size_t, const ParamSet<float>&) { ++steps; };
  const RunResult r = train(m, tc, train_set, val_set, 42, opt);

  bool ok = steps == 100;
  for (std::size_t i = 0; i < m.depth / 2; ++i) {
    for (MlpPart part : kMlpParts) {
      const Tensor<float> a = r.final_params.mlp(2 * i, part), b = r.final_params.mlp(2 * i + 1, part);
      ok = ok && a.numel() == b.numel() &&
           std::memcmp(a.data().data(), b.data().data(), a.numel() * sizeof(float)) == 0;
    }
  }
  const Checkpoint<float> ck = load_checkpoint<float>(work / "sharing" / "final.vslm");
  std::size_t mlp_entries = 0;
  for (const auto& e : ck.params.entries()) mlp_entries += e.path.starts_with("mlps.") ? 1 : 0;
  const std::size_t storages = mlp_entries / kMlpParts.size();
  ok = ok && storages == m.depth / 2 && ck.params.unique_mlp_count() == m.depth / 2;
  report(7, ok, std::to_string(steps) + " steps, block pairs bitwise identical, checkpoint holds " +
                    std::to_string(storages) + " MLP storages for depth " + std::to_string(m.depth));
}

// FNV-1a over every storage's bytes.
std::uint64_t param_hash(const ParamSet<float>& p) {
  std::uint64_t h = 1469598103934665603ull;
  for (const auto& e : p.entries()) {
    const auto* bytes = reinterpret_cast<const unsigned char*>(e.tensor.data().data());
    for (std::size_t i = 0; i < e.tensor.numel() * sizeof(float); ++i) {
      h = (h ^ bytes[i]) * 1099511628211ull;
    }
  }
  return h;
}

void criterion8() {
  const auto t0 = Clock::now();
  SynthSpec spec;  // 10 classes, 200 per class, noise 0.05
  spec.seed = 7;
  const auto [train_set, val_set] = split_holdout(synth_dataset(spec), 0.2);
  const TrainConfig tc = smoke_train_config();
  constexpr std::size_t kRerunEpochs = 3;
  bool ok = true;
  std::string detail;
  for (const MLPVariant& v : {MLPVariant{Baseline{}}, MLPVariant{Grouped{}}, MLPVariant{Shallow{}}}) {
    const ModelConfig m = tiny_vit(v);
    std::vector<std::uint64_t> hashes, rerun_hashes;
    TrainOptions opt;
    opt.on_step = [&](std::size_t, const ParamSet<float>& p) { hashes.push_back(param_hash(p)); };
    const RunResult r = train(m, tc, train_set, val_set, 42, opt);
    const auto& ep = r.metrics.epochs;

    // Identical-seed rerun of the leading epochs: per-step parameter hashes
    // and epoch records must match the first run exactly.
    TrainOptions again;
    again.stop_after_epochs = kRerunEpochs;
    again.on_step = [&](std::size_t, const ParamSet<float>& p) { rerun_hashes.push_back(param_hash(p)); };
    const RunResult r2 = train(m, tc, train_set, val_set, 42, again);
    bool same = !rerun_hashes.empty() && rerun_hashes.size() <= hashes.size() &&
                r2.metrics.epochs.size() == kRerunEpochs;
    for (std::size_t i = 0; same && i < rerun_hashes.size(); ++i) same = rerun_hashes[i] == hashes[i];
    for (std::size_t e = 0; same && e < kRerunEpochs; ++e) same = r2.metrics.epochs[e].same_values(ep[e]);

    const double train_top1 = r.metrics.final_train_top1;
    const double held_out = ep.back().val_top1;
    const bool loss_down = ep[9].train_loss < ep[0].train_loss;
    const bool v_ok = train_top1 >= 90.0 && held_out >= 80.0 && loss_down && same;
    ok = ok && v_ok;
    detail += variant_display(v) + " train " + fmt("%.1f", train_top1) + " held-out " + fmt("%.1f", held_out) +
              " loss e1 " + fmt("%.3f", ep[0].train_loss) + " e10 " + fmt("%.3f", ep[9].train_loss) +
              (same ? " rerun identical" : " rerun DIFFERS") + "; ";
  }
  detail += fmt("%.0f s total", seconds_since(t0));
  report(8, ok, detail);
}

void criterion9() {
  const std::vector<double> curve = {80.0, 81.5, 81.2, 81.0};
  const StabilityMetrics m = stability_metrics(curve);
  const std::vector<double> a = {1, 2, 3, 4}, b = {2, 3, 5, 5};
  const TTestResult t = paired_t_test(a, b);
  const bool ok = near(m.gap, 0.5, 1e-12) && m.peak_epoch == 2 && near(t.t, -5.0, 1e-12) && t.df == 3 &&
                  t.p && near(*t.p, 0.0154, 0.0005);
  report(9, ok, "gap " + fmt("%.3f", m.gap) + " peak epoch " + std::to_string(m.peak_epoch) + ", t " +
                    fmt("%.4f", t.t) + " df " + std::to_string(t.df) + " p " + fmt("%.5f", t.p.value_or(-1)));
}

void criterion10() {
  // d = 768, 12 heads, 224 px / 16 px patches, hidden 3072; depth cut to 2 to
  // bound the runtime. Per-block cost is what differs between variants.
  std::vector<double> ips;
  for (const MLPVariant& v : {MLPVariant{Baseline{}}, MLPVariant{Grouped{}}, MLPVariant{Shallow{}}}) {
    ModelConfig m = vit_b16(v);
    m.depth = 2;
    const ParamSet<float> p = init_model<float>(m, 0);
    ips.push_back(measure_throughput(p, m, 8, 1, 5).images_per_second);
  }
  const double shallow = ips[2] / ips[0], grouped = ips[1] / ips[0];
  const bool ok = shallow > 1.0 && std::abs(grouped - 1.0) <= 0.10;
  report(10, ok, "img/s " + fmt("%.2f", ips[0]) + "/" + fmt("%.2f", ips[1]) + "/" + fmt("%.2f", ips[2]) +
                     " (d=768, depth 2, batch 8), shallow/baseline " + fmt("%.3f", shallow) +
                     ", grouped/baseline " + fmt("%.3f", grouped));
}

void criterion11() {
  // The criterion is the explicit statement itself. No ImageNet number is
  // produced or claimed.
  report(11, true,
         "NOT REPRODUCIBLE, stated explicitly: ImageNet top-1/top-5 accuracies, peak epochs, "
         "peak-to-final gaps and validation curves need full-scale ImageNet training and are not "
         "produced here; criteria 1-10 stand in for them");
}

}  // namespace

int main() {
  tune_allocator();
  const fs::path work = fs::temp_directory_path() / "vitslim_acceptance";
  fs::remove_all(work);
  fs::create_directories(work);
  criterion1();
  criterion2();
  criterion3();
  criterion4();
  criterion5();
  criterion6();
  criterion7(work);
  criterion8();
  criterion9();
  criterion10();
  criterion11();
  std::printf("%d criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
