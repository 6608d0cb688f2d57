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

#include "vitslim/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "vitslim/ops.hpp"
#include "vitslim/rng.hpp"

namespace vitslim {

double relative_error(double analytic, double numeric, double floor) {
  const double denom = std::max({std::abs(analytic), std::abs(numeric), floor});
  return std::abs(analytic - numeric) / denom;
}

bool GradCheckReport::pass() const {
  return std::all_of(groups.begin(), groups.end(), [](const GroupCheck& g) { return g.pass; });
}

std::string GradCheckReport::format() const {
  std::string out;
  char line[256];
  for (const GroupCheck& g : groups) {
    std::snprintf(line, sizeof(line), "%s %s checked=%zu/%zu max_rel_err=%.3e\n",
                  g.pass ? "PASS" : "FAIL", g.name.c_str(), g.checked, g.size, g.max_rel_error);
    out += line;
  }
  return out;
}

namespace {

std::vector<std::size_t> pick_indices(std::size_t size, const GradCheckOptions& options,
                                      std::uint64_t group) {
  std::vector<std::size_t> idx(size);
  std::iota(idx.begin(), idx.end(), 0);
  if (size <= options.exhaustive_limit || size <= options.samples) return idx;
  Rng rng = make_rng(options.seed, Stream::kTest, {group});
  for (std::size_t i = 0; i < options.samples; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(uniform01(rng) * static_cast<double>(size - i));
    std::swap(idx[i], idx[std::min(j, size - 1)]);
  }
  idx.resize(options.samples);
  std::sort(idx.begin(), idx.end());
  return idx;
}

}  // namespace

GradCheckReport gradcheck(const LossFn& loss, const std::vector<NamedTensor>& inputs,
                          const GradCheckOptions& options,
                          const std::function<void(Graph<double>&)>& prepare) {
  for (const NamedTensor& in : inputs) {
    in.tensor.ensure_grad();
    Tensor<double> t = in.tensor;
    t.set_requires_grad(true);
    t.zero_grad();
  }
  {
    Graph<double> g;
    if (prepare) prepare(g);
    g.backward(loss(g));
  }
  auto eval = [&] {
    Graph<double> g(false);
    return loss(g).item();
  };

  GradCheckReport report;
  for (std::size_t gi = 0; gi < inputs.size(); ++gi) {
    Tensor<double> t = inputs[gi].tensor;
    GroupCheck check;
    check.name = inputs[gi].name;
    check.size = t.numel();
    const std::vector<double> analytic(t.grad().begin(), t.grad().end());
    for (std::size_t i : pick_indices(t.numel(), options, gi)) {
      const double orig = t[i];
      t[i] = orig + options.step;
      const double up = eval();
      t[i] = orig - options.step;
      const double down = eval();
      t[i] = orig;
      const double numeric = (up - down) / (2.0 * options.step);
      const double err = relative_error(analytic[i], numeric, options.denominator_floor);
      if (check.checked == 0 || !(err <= check.max_rel_error)) {
        check.max_rel_error = err;
        check.worst_index = i;
      }
      ++check.checked;
    }
    check.pass = std::isfinite(check.max_rel_error) && check.max_rel_error <= options.tolerance;
    report.groups.push_back(std::move(check));
  }
  return report;
}

namespace {

Tensor<double> model_loss(Graph<double>& g, const ParamSet<double>& params,
                          const ModelConfig& config, const Batch<double>& batch) {
  Tensor<double> logits = forward(g, params, config, batch.images, Mode::kEval);
  return ops::soft_cross_entropy(g, logits, soft_targets(batch, config.num_classes));
}

}  // namespace

GradCheckReport gradcheck_model(const ParamSet<double>& params, const ModelConfig& config,
                                const Batch<double>& batch, const GradCheckOptions& options,
                                std::optional<std::string> corrupt_op) {
  std::vector<NamedTensor> inputs;
  for (const auto& e : params.entries()) inputs.push_back({e.path, e.tensor});
  std::function<void(Graph<double>&)> prepare;
  if (corrupt_op) {
    prepare = [op = *corrupt_op](Graph<double>& g) { g.inject_fault(op, 1.5); };
  }
  return gradcheck([&](Graph<double>& g) { return model_loss(g, params, config, batch); }, inputs,
                   options, prepare);
}

std::vector<SharedGradCheck> check_shared_decomposition(const ParamSet<double>& params,
                                                        const ModelConfig& config,
                                                        const Batch<double>& batch) {
  auto grads_of = [&](const ParamSet<double>& p) {
    ParamSet<double> local = p;
    local.set_requires_grad(true);
    local.zero_grad();
    Graph<double> g;
    g.backward(model_loss(g, local, config, batch));
    return local;
  };

  const ParamSet<double> tied = grads_of(params.clone());

  ParamSet<double> untied = params.clone();
  const std::vector<std::size_t> map = params.sharing_map();
  std::vector<bool> seen(*std::max_element(map.begin(), map.end()) + 1, false);
  for (std::size_t b = 0; b < map.size(); ++b) {
    if (seen[map[b]]) untied.untie(b);
    seen[map[b]] = true;
  }
  grads_of(untied);

  std::vector<SharedGradCheck> out;
  for (std::size_t s = 0; s < seen.size(); ++s) {
    std::vector<std::size_t> users;
    for (std::size_t b = 0; b < map.size(); ++b) {
      if (map[b] == s) users.push_back(b);
    }
    if (users.size() < 2) continue;
    for (MlpPart part : kMlpParts) {
      const Tensor<double> shared = tied.mlp(users.front(), part);
      std::vector<double> summed(shared.numel(), 0.0);
      for (std::size_t b : users) {
        const Tensor<double> copy = untied.mlp(b, part);
        for (std::size_t i = 0; i < summed.size(); ++i) summed[i] += copy.grad()[i];
      }
      SharedGradCheck c{mlp_storage_path(s, part), 0.0};
      for (std::size_t i = 0; i < summed.size(); ++i) {
        c.max_abs_diff = std::max(c.max_abs_diff, std::abs(summed[i] - shared.grad()[i]));
      }
      out.push_back(std::move(c));
    }
  }
  return out;
}

Batch<double> random_batch(const ModelConfig& config, std::size_t batch, std::uint64_t seed) {
  Batch<double> b;
  b.images = Tensor<double>(
      Shape{batch, config.in_channels, config.image_size, config.image_size});
  Rng rng = make_rng(seed, Stream::kTest, {0});
  for (double& v : b.images.data()) v = standard_normal(rng);
  for (std::size_t i = 0; i < batch; ++i) {
    b.labels.push_back(static_cast<std::uint32_t>(i % config.num_classes));
  }
  return b;
}

}  // namespace vitslim
