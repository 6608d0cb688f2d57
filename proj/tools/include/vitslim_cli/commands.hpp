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

#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

namespace vitslim::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 2;    // bad config, bad arguments, bad input files
inline constexpr int kExitFailure = 3;  // runtime failure, including failed checks

// Runs one command line (without the program name). Machine-readable output
// goes to `out`, diagnostics to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

// Per-seed summaries of a run: either one seed directory holding
// run_summary.json, or a directory of seed_* subdirectories. Keyed by seed.
std::map<std::uint64_t, std::map<std::string, double>> load_run_summaries(
    const std::filesystem::path& dir);

// metrics.csv files for the given files or run directories, in argument
// order and then by seed directory name.
std::vector<std::filesystem::path> find_metric_files(const std::vector<std::filesystem::path>& inputs);

// Per-epoch mean/min/max across runs. Throws ConfigError naming every file
// when the runs disagree on the number of epochs.
std::string merge_curves(const std::vector<std::filesystem::path>& files);

}  // namespace vitslim::cli
