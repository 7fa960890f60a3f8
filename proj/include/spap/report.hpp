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

#include <json.hpp>

#include <string>
#include <vector>

namespace spap {

inline constexpr const char* report_format = "spap-report/1";

/// Caveat attached to every cost figure.
inline constexpr const char* cost_model_note =
    "cost model covers MLP blocks only; whole-model memory ratios of real decoders stay above "
    "1 - sparsity because attention and embedding parameters are not pruned";

nlohmann::json layer_report_json(const LayerReport& lr);
nlohmann::json prune_report_json(const PruneReport& report, const SparsityPlan& plan, const RunConfig& cfg);

struct SweepRow
{
    double sparsity = 0.0;
    Variant variant = Variant::full;
    std::vector<Index> lambdas;
    double end_to_end_error = 0.0;
    Index pruned_params = 0;
};

nlohmann::json sweep_report_json(const std::vector<SweepRow>& rows, Index dense_params, const RunConfig& cfg);

/*
 * Comma-separated (sparsity, error per variant) series from a prune or sweep
 * report. Columns follow the variants named in the report; rows are sorted by
 * sparsity. Throws ConfigError on a malformed report.
 */
std::string plot_series_csv(const nlohmann::json& report);

}  // namespace spap
