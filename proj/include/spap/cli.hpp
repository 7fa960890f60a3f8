// Copyright 2026 The spap Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <spap/config.hpp>
#include <spap/pipeline.hpp>

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>

namespace spap {

// Exit codes shared by every subcommand.
inline constexpr int exit_ok = 0;
inline constexpr int exit_config = 1;
inline constexpr int exit_numeric = 2;
inline constexpr int exit_io = 3;

struct CommandOptions
{
    std::string config_path;
    std::string out_dir;
    std::string report_path;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> variant;
};

/// Dense model, calibration samples and plan resolved from a config.
struct RunInputs
{
    ToyModel model;
    MatrixXd calibration;
    SparsityPlan plan;
};

RunInputs load_inputs(const RunConfig& cfg);

/// Applies --seed / --variant overrides on top of the config file.
RunConfig resolve_config(const CommandOptions& opts);

int cmd_prune(const CommandOptions& opts, std::ostream& out, std::ostream& err);
int cmd_sweep(const CommandOptions& opts, std::ostream& out, std::ostream& err);
int cmd_oracle_compare(const CommandOptions& opts, std::ostream& out, std::ostream& err);
int cmd_bench(const CommandOptions& opts, std::ostream& out, std::ostream& err);
int cmd_plot_data(const CommandOptions& opts, std::ostream& out, std::ostream& err);

/// Full command-line entry point: `spap <subcommand> [flags]`.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace spap
