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

#include <spap/pipeline.hpp>

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace spap {

/// Where the dense model comes from: a container file, or a seeded random stack.
struct ModelSource
{
    std::optional<std::string> path;
    Index layers = 2;
    Index model_dim = 16;
    Index hidden_dim = 32;
    bool residual = true;
};

struct CalibrationSource
{
    std::optional<std::string> path;  // container holding an entry named "calibration"
    Index samples = 256;              // seeded N(0,1) samples when no path is given
    double holdout_fraction = 0.125;
};

struct SparsitySettings
{
    double overall = 0.3;
    double mlp_share = 1.0;
    std::optional<std::vector<Index>> per_layer_lambda;
};

struct OracleSettings
{
    bool enabled = false;
    std::uint64_t max_subsets = default_oracle_guard;
};

struct BenchSettings
{
    std::uint64_t seq_len = 256;
    int repeats = 5;
    std::vector<double> sparsities{0.1, 0.2, 0.3};
};

struct SweepSettings
{
    std::vector<double> sparsities{0.1, 0.2, 0.3, 0.4, 0.5};
    std::vector<Variant> variants{Variant::full, Variant::no_update, Variant::gd_only};
};

/*
 * Run configuration, read from JSON. Every section and key is optional and
 * falls back to the defaults above; unknown keys are rejected. Relative
 * paths resolve against the directory holding the config file.
 */
struct RunConfig
{
    std::uint64_t seed = 0;
    Variant variant = Variant::full;
    ModelSource model;
    CalibrationSource calibration;
    SparsitySettings sparsity;
    PenaltyConfig penalty;
    AltMinConfig altmin;
    OracleSettings oracle;
    BenchSettings bench;
    SweepSettings sweep;

    /// Directory used to resolve relative paths; not serialized.
    std::filesystem::path base_dir;

    void validate() const;
    PipelineConfig pipeline() const;
};

RunConfig config_from_json(const nlohmann::json& j);
nlohmann::json config_to_json(const RunConfig& cfg);
RunConfig load_config(const std::filesystem::path& path);

}  // namespace spap
