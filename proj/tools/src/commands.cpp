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

#include "vitslim_cli/commands.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>

#include "vitslim/accounting.hpp"
#include "vitslim/checkpoint.hpp"
#include "vitslim/config_json.hpp"
#include "vitslim/error.hpp"
#include "vitslim/gradcheck.hpp"
#include "vitslim/init.hpp"
#include "vitslim/metrics.hpp"
#include "vitslim/train.hpp"
#include "vitslim_cli/run_spec.hpp"

namespace vitslim::cli {
namespace {

using nlohmann::json;
namespace fs = std::filesystem;

constexpr const char* kMachineNote =
    "throughput depends on this machine's CPU, compiler flags and load; compare ratios "
    "within one report, not absolute numbers across machines";

struct Common {
  std::string config;
  std::optional<std::string> preset, variant, seeds, out;
  std::optional<std::size_t> group_size, depth;
  std::vector<Override> dotted;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--config", c.config, "JSON configuration document");
  cmd->add_option("--preset", c.preset, "tiny | vit_b16");
  cmd->add_option("--variant", c.variant, "baseline | grouped | shallow");
  cmd->add_option("--group-size", c.group_size, "blocks per shared MLP (grouped)");
  cmd->add_option("--depth", c.depth, "number of transformer blocks");
  cmd->add_option("--seed,--seeds", c.seeds, "seed or comma-separated seeds");
  cmd->add_option("--out", c.out, "output directory");
}

RunSpec resolve_common(const Common& c) {
  json doc = json::object();
  if (!c.config.empty()) doc = read_document(c.config);
  std::vector<Override> ov;
  if (c.preset) ov.emplace_back("preset", json(*c.preset).dump());
  if (c.variant) ov.emplace_back("model.variant", json(*c.variant).dump());
  if (c.group_size) ov.emplace_back("model.group_size", std::to_string(*c.group_size));
  if (c.depth) ov.emplace_back("model.depth", std::to_string(*c.depth));
  if (c.seeds) ov.emplace_back("train.seeds", *c.seeds);
  if (c.out) ov.emplace_back("output_dir", json(*c.out).dump());
  ov.insert(ov.end(), c.dotted.begin(), c.dotted.end());
  const char* root = std::getenv("VITSLIM_OUTPUT_ROOT");
  return resolve(doc, ov, root ? std::optional<std::string>(root) : std::nullopt);
}

// Pulls "--a.b value" and "--a.b=value" out of the argument list.
std::vector<std::string> extract_dotted(const std::vector<std::string>& args,
                                        std::vector<Override>& dotted) {
  std::vector<std::string> rest;
  for (std::size_t i = 0; i < args.size(); ++i) {
    const std::string& a = args[i];
    const bool is_key = a.rfind("--", 0) == 0 && a.find('.') != std::string::npos &&
                        a.find('.') < a.find('=');
    if (!is_key) {
      rest.push_back(a);
      continue;
    }
    const auto eq = a.find('=');
    if (eq != std::string::npos) {
      dotted.emplace_back(a.substr(2, eq - 2), a.substr(eq + 1));
    } else {
      if (i + 1 >= args.size()) throw ConfigError("override '" + a + "' needs a value");
      dotted.emplace_back(a.substr(2), args[++i]);
    }
  }
  return rest;
}

// The three variants at the run's dimensions. Grouped and shallow keep
// their configured parameters when the run already selects them.
std::vector<ModelConfig> variant_configs(const ModelConfig& model) {
  ModelConfig b = model, g = model, s = model;
  b.variant = Baseline{};
  if (!std::holds_alternative<Grouped>(model.variant)) g.variant = Grouped{};
  if (!std::holds_alternative<Shallow>(model.variant)) s.variant = Shallow{};
  for (const ModelConfig* c : {&b, &g, &s}) validate(*c);
  return {b, g, s};
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

int cmd_count(const Common& c, const std::string& format, std::ostream& out) {
  const RunSpec spec = resolve_common(c);
  std::vector<ModelStats> rows;
  for (const ModelConfig& cfg : variant_configs(spec.model)) rows.push_back(count_params(cfg));
  if (format == "csv") {
    out << format_stats_csv(rows);
  } else if (format == "json") {
    json arr = json::array();
    for (const ModelStats& s : rows) {
      arr.push_back({{"model", s.model},
                     {"params", s.total_params},
                     {"mlp_params", s.mlp_params},
                     {"unique_mlp", s.unique_mlp_blocks},
                     {"gmacs", s.gmacs},
                     {"expansion", format_expansion(s.expansion_ratio)},
                     {"reduction_vs_baseline", s.reduction_fraction(rows.front())}});
    }
    out << arr.dump(2) << "\n";
  } else {
    out << format_stats_table(rows);
  }
  return kExitOk;
}

int cmd_flops(const Common& c, const std::string& convention, std::ostream& out) {
  const RunSpec spec = resolve_common(c);
  FlopConvention conv;
  if (convention == "dense") {
    conv = FlopConvention::kDenseOnly;
  } else if (convention == "full") {
    conv = FlopConvention::kFull;
  } else {
    throw ConfigError("--convention must be 'dense' or 'full'");
  }
  out << "model,patch_embed,qkv,attn_scores,attn_values,attn_proj,mlp,head,total_macs,gmacs\n";
  for (const ModelConfig& cfg : variant_configs(spec.model)) {
    const MacBreakdown m = count_macs(cfg, conv);
    out << variant_display(cfg.variant) << "," << m.patch_embed << "," << m.qkv << ","
        << m.attn_scores << "," << m.attn_values << "," << m.attn_proj << "," << m.mlp << ","
        << m.head << "," << m.total() << "," << fmt("%.4f", m.gmacs()) << "\n";
  }
  return kExitOk;
}

std::string format_summary(const std::map<std::string, MeanStd>& agg) {
  std::string s;
  for (const auto& [name, ms] : agg) {
    char line[160];
    std::snprintf(line, sizeof line, "%s: %.4f ± %.4f (n=%zu)\n", name.c_str(), ms.mean, ms.std,
                  ms.n);
    s += line;
  }
  return s;
}

json t_test_json(const TTestResult& t) {
  json j = {{"t", t.degenerate ? json(nullptr) : json(t.t)},
            {"df", t.df},
            {"mean_diff", t.mean_diff},
            {"sd_diff", t.sd_diff},
            {"degenerate", t.degenerate}};
  j["p"] = t.p ? json(*t.p) : json(nullptr);
  return j;
}

// Paired comparison a - b over the seeds both runs share.
json compare_runs(const fs::path& a, const fs::path& b, const std::string& metric) {
  const auto ra = load_run_summaries(a);
  const auto rb = load_run_summaries(b);
  std::vector<double> va, vb;
  json seeds = json::array();
  for (const auto& [seed, m] : ra) {
    auto it = rb.find(seed);
    if (it == rb.end()) continue;
    auto ma = m.find(metric);
    auto mb = it->second.find(metric);
    if (ma == m.end() || mb == it->second.end()) {
      throw ConfigError("metric '" + metric + "' missing for seed " + std::to_string(seed));
    }
    va.push_back(ma->second);
    vb.push_back(mb->second);
    seeds.push_back(seed);
  }
  if (va.size() < 2) {
    throw ConfigError("paired t-test needs at least two seeds present in both '" + a.string() +
                      "' and '" + b.string() + "' (found " + std::to_string(va.size()) + ")");
  }
  json j = t_test_json(paired_t_test(va, vb));
  j["metric"] = metric;
  j["seeds"] = seeds;
  j["a"] = va;
  j["b"] = vb;
  return j;
}

int cmd_train(const Common& c, std::ostream& out, std::ostream& err) {
  const RunSpec spec = resolve_common(c);
  const auto [train_set, val_set] = load_data(spec.data, spec.model);
  fs::create_directories(spec.output_dir);

  std::vector<std::map<std::string, double>> runs;
  for (std::uint64_t seed : spec.train.seeds) {
    TrainOptions opt;
    opt.out_dir = spec.output_dir / ("seed_" + std::to_string(seed));
    opt.on_epoch = [&, seed](const EpochRecord& r) {
      char line[200];
      std::snprintf(line, sizeof line, "seed %llu epoch %zu/%zu loss %.4f top1 %.2f ema_top1 %.2f\n",
                    static_cast<unsigned long long>(seed), r.epoch, spec.train.epochs, r.train_loss,
                    r.val_top1, r.ema_val_top1);
      err << line << std::flush;
    };
    runs.push_back(train(spec.model, spec.train, train_set, val_set, seed, opt).metrics.summary());
  }

  const auto agg = aggregate_seeds(runs);
  json summary;
  summary["model"] = model_config_to_json(spec.model);
  summary["train"] = train_config_to_json(spec.train);
  summary["seeds"] = spec.train.seeds;
  for (const auto& [name, ms] : agg) {
    summary["metrics"][name] = {{"mean", ms.mean}, {"std", ms.std}, {"n", ms.n}};
  }
  std::string text = format_summary(agg);
  if (spec.baseline_run) {
    const json cmp = compare_runs(spec.output_dir, *spec.baseline_run, "best_ema_top1");
    summary["comparison"] = cmp;
    summary["comparison"]["baseline_run"] = spec.baseline_run->string();
    text += "paired t-test vs " + spec.baseline_run->string() + ": " + cmp.dump() + "\n";
  }
  std::ofstream(spec.output_dir / "summary.json") << summary.dump(2) << "\n";
  std::ofstream(spec.output_dir / "summary.txt") << text;
  out << text;
  return kExitOk;
}

int cmd_eval(const Common& c, const fs::path& checkpoint, std::ostream& out) {
  const RunSpec spec = resolve_common(c);
  const Checkpoint<float> ck = load_checkpoint<float>(checkpoint);
  const auto [train_set, val_set] = load_data(spec.data, ck.config);
  NormStats norm;
  const fs::path manifest = checkpoint.parent_path() / "manifest.json";
  if (fs::exists(manifest)) {
    const json m = read_document(manifest);
    norm.mean = m.at("norm").at("mean").get<std::vector<float>>();
    norm.std = m.at("norm").at("std").get<std::vector<float>>();
  } else {
    norm = compute_norm_stats(train_set);
  }
  const EvalResult r = evaluate(ck.params, ck.config, val_set, norm);
  out << json{{"checkpoint", checkpoint.string()},
              {"images", val_set.size()},
              {"top1", r.top1},
              {"top5", r.top5},
              {"loss", r.loss}}
             .dump(2)
      << "\n";
  return kExitOk;
}

int cmd_gradcheck(const Common& c, std::size_t batch, std::size_t samples,
                  const std::optional<std::string>& corrupt, std::ostream& out) {
  RunSpec spec = resolve_common(c);
  ModelConfig& m = spec.model;
  if (m.embed_dim > 128 || m.image_size > 32 || m.depth > 8 || m.mlp_hidden > 512) {
    throw ConfigError("gradcheck runs on tiny models only (embed_dim <= 128, image_size <= 32, "
                      "depth <= 8, mlp_hidden <= 512)");
  }
  if (batch == 0) throw ConfigError("--batch must be positive");
  m.drop_path_rate = 0.0;
  InitSpec init;
  init.zero_head = false;  // a zero head would zero every other gradient
  const std::uint64_t seed = spec.train.seeds.empty() ? 0 : spec.train.seeds.front();
  const ParamSet<double> params = init_model<double>(m, seed, init);
  const Batch<double> data = random_batch(m, batch, seed);

  GradCheckOptions opt;
  opt.samples = samples;
  opt.seed = seed;
  const GradCheckReport report = gradcheck_model(params, m, data, opt, corrupt);
  out << report.format();
  bool pass = report.pass();
  for (const SharedGradCheck& s : check_shared_decomposition(params, m, data)) {
    const bool ok = s.max_abs_diff <= 1e-10;
    pass = pass && ok;
    char line[200];
    std::snprintf(line, sizeof line, "%s shared-sum %s max_abs_diff=%.3e\n", ok ? "PASS" : "FAIL",
                  s.storage.c_str(), s.max_abs_diff);
    out << line;
  }
  out << (pass ? "gradcheck PASS\n" : "gradcheck FAIL\n");
  return pass ? kExitOk : kExitFailure;
}

int cmd_bench(const Common& c, std::size_t batch, std::size_t iters, std::size_t warmup,
              std::ostream& out) {
  const RunSpec spec = resolve_common(c);
  if (iters < 3) throw ConfigError("--iters must be at least 3");
  if (batch == 0) throw ConfigError("--batch must be positive");
  const std::uint64_t seed = spec.train.seeds.empty() ? 0 : spec.train.seeds.front();
  json results = json::array();
  std::vector<double> ips;
  for (const ModelConfig& cfg : variant_configs(spec.model)) {
    const ParamSet<float> params = init_model<float>(cfg, seed);
    const ThroughputResult r = measure_throughput(params, cfg, batch, warmup, iters);
    ips.push_back(r.images_per_second);
    results.push_back({{"model", variant_display(cfg.variant)},
                       {"images_per_second", r.images_per_second},
                       {"stddev", r.stddev},
                       {"samples", r.samples}});
  }
  out << json{{"machine_note", kMachineNote},
              {"embed_dim", spec.model.embed_dim},
              {"depth", spec.model.depth},
              {"batch", batch},
              {"iters", iters},
              {"results", results},
              {"shallow_over_baseline", ips[2] / ips[0]},
              {"grouped_over_baseline", ips[1] / ips[0]}}
             .dump(2)
      << "\n";
  return kExitOk;
}

int cmd_curves(const std::vector<fs::path>& inputs, const std::string& output, std::ostream& out) {
  const std::string csv = merge_curves(find_metric_files(inputs));
  if (output.empty()) {
    out << csv;
  } else {
    std::ofstream f(output);
    if (!f) throw Error("cannot write '" + output + "'");
    f << csv;
  }
  return kExitOk;
}

}  // namespace

std::map<std::uint64_t, std::map<std::string, double>> load_run_summaries(const fs::path& dir) {
  std::vector<fs::path> files;
  if (fs::exists(dir / "run_summary.json")) {
    files.push_back(dir / "run_summary.json");
  } else if (fs::is_directory(dir)) {
    for (const auto& e : fs::directory_iterator(dir)) {
      if (e.is_directory() && e.path().filename().string().rfind("seed_", 0) == 0 &&
          fs::exists(e.path() / "run_summary.json")) {
        files.push_back(e.path() / "run_summary.json");
      }
    }
  }
  if (files.empty()) throw ConfigError("no run summaries under '" + dir.string() + "'");
  std::map<std::uint64_t, std::map<std::string, double>> out;
  for (const fs::path& f : files) {
    const json j = read_document(f);
    std::map<std::string, double> m;
    for (const auto& [k, v] : j.items()) {
      if (k != "seed" && v.is_number()) m[k] = v.get<double>();
    }
    out[j.at("seed").get<std::uint64_t>()] = std::move(m);
  }
  return out;
}

std::vector<fs::path> find_metric_files(const std::vector<fs::path>& inputs) {
  std::vector<fs::path> files;
  for (const fs::path& in : inputs) {
    if (fs::is_regular_file(in)) {
      files.push_back(in);
    } else if (fs::exists(in / "metrics.csv")) {
      files.push_back(in / "metrics.csv");
    } else if (fs::is_directory(in)) {
      std::vector<fs::path> found;
      for (const auto& e : fs::directory_iterator(in)) {
        if (e.is_directory() && fs::exists(e.path() / "metrics.csv")) found.push_back(e.path() / "metrics.csv");
      }
      if (found.empty()) throw ConfigError("no metrics.csv under '" + in.string() + "'");
      std::sort(found.begin(), found.end());
      files.insert(files.end(), found.begin(), found.end());
    } else {
      throw ConfigError("'" + in.string() + "' does not exist");
    }
  }
  if (files.empty()) throw ConfigError("curves needs at least one run");
  return files;
}

std::string merge_curves(const std::vector<fs::path>& files) {
  std::vector<std::vector<EpochRecord>> runs;
  for (const fs::path& f : files) runs.push_back(read_metrics_csv(f));
  bool same = true;
  for (const auto& r : runs) same = same && r.size() == runs.front().size();
  if (!same) {
    std::string msg = "runs disagree on the number of epochs:";
    for (std::size_t i = 0; i < files.size(); ++i) {
      msg += " " + files[i].string() + " (" + std::to_string(runs[i].size()) + ")";
    }
    throw ConfigError(msg);
  }
  using Field = double EpochRecord::*;
  const std::vector<std::pair<std::string, Field>> fields = {
      {"train_loss", &EpochRecord::train_loss},
      {"top1", &EpochRecord::val_top1},
      {"top5", &EpochRecord::val_top5},
      {"ema_top1", &EpochRecord::ema_val_top1},
      {"lr", &EpochRecord::lr}};
  std::string csv = "epoch";
  for (const auto& [name, unused] : fields) {
    csv += ",mean_" + name + ",min_" + name + ",max_" + name;
  }
  csv += "\n";
  for (std::size_t e = 0; e < runs.front().size(); ++e) {
    csv += std::to_string(runs.front()[e].epoch);
    for (const auto& [name, field] : fields) {
      double sum = 0.0, lo = runs.front()[e].*field, hi = lo;
      for (const auto& r : runs) {
        const double v = r[e].*field;
        sum += v;
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
      csv += fmt(",%.9g", sum / static_cast<double>(runs.size())) + fmt(",%.9g", lo) + fmt(",%.9g", hi);
    }
    csv += "\n";
  }
  return csv;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"vitslim: ViT MLP-variant experiments"};
  app.require_subcommand(1, 1);
  Common common;

  std::string count_format = "table";
  auto* count = app.add_subcommand("count", "parameter, MLP and GMAC table for the three variants");
  add_common(count, common);
  count->add_option("--format", count_format, "table | csv | json");

  std::string convention = "dense";
  auto* flops = app.add_subcommand("flops", "per-layer MAC breakdown for the three variants");
  add_common(flops, common);
  flops->add_option("--convention", convention, "dense | full");

  auto* train_cmd = app.add_subcommand("train", "train every seed and summarize");
  add_common(train_cmd, common);

  std::string checkpoint;
  auto* eval = app.add_subcommand("eval", "evaluate a checkpoint on the validation split");
  add_common(eval, common);
  eval->add_option("checkpoint", checkpoint, "checkpoint file")->required();

  std::size_t gc_batch = 1, gc_samples = 16;
  std::optional<std::string> corrupt;
  auto* gradcheck_cmd = app.add_subcommand("gradcheck", "finite-difference gradient check");
  add_common(gradcheck_cmd, common);
  gradcheck_cmd->add_option("--batch", gc_batch, "images per check");
  gradcheck_cmd->add_option("--samples", gc_samples, "entries checked per large tensor");
  gradcheck_cmd->add_option("--corrupt-op", corrupt, "scale this op's backward by 1.5 (negative control)");

  std::size_t bench_batch = 8, bench_iters = 5, bench_warmup = 1;
  auto* bench = app.add_subcommand("bench", "forward-only throughput of the three variants");
  add_common(bench, common);
  bench->add_option("--batch", bench_batch, "images per forward");
  bench->add_option("--iters", bench_iters, "timed iterations (>= 3)");
  bench->add_option("--warmup", bench_warmup, "untimed iterations");

  std::vector<fs::path> curve_inputs;
  std::string curve_output;
  auto* curves = app.add_subcommand("curves", "merge per-seed metrics.csv into mean/min/max columns");
  curves->add_option("runs", curve_inputs, "run directories or metrics.csv files")->required();
  curves->add_option("-o,--output", curve_output, "write here instead of stdout");

  std::vector<fs::path> stat_dirs;
  std::string metric = "best_ema_top1";
  auto* stats = app.add_subcommand("stats", "paired t-test between two run directories");
  stats->add_option("runs", stat_dirs, "run A and run B")->required()->expected(2);
  stats->add_option("--metric", metric, "summary metric to compare");

  try {
    std::vector<std::string> rest = extract_dotted(args, common.dotted);
    std::reverse(rest.begin(), rest.end());
    app.parse(rest);
    if (count->parsed()) return cmd_count(common, count_format, out);
    if (flops->parsed()) return cmd_flops(common, convention, out);
    if (train_cmd->parsed()) return cmd_train(common, out, err);
    if (eval->parsed()) return cmd_eval(common, checkpoint, out);
    if (gradcheck_cmd->parsed()) return cmd_gradcheck(common, gc_batch, gc_samples, corrupt, out);
    if (bench->parsed()) return cmd_bench(common, bench_batch, bench_iters, bench_warmup, out);
    if (curves->parsed()) return cmd_curves(curve_inputs, curve_output, out);
    if (stats->parsed()) {
      out << compare_runs(stat_dirs[0], stat_dirs[1], metric).dump(2) << "\n";
      return kExitOk;
    }
    return kExitUsage;
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const ContractError& e) {
    err << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const TrainingDiverged& e) {
    err << "training aborted: " << e.what() << "\n";
    return kExitFailure;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitFailure;
  }
}

}  // namespace vitslim::cli
