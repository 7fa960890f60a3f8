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

#include <spap/report.hpp>

#include <map>
#include <sstream>

namespace spap {

using nlohmann::json;

namespace {

double ratio(double num, double den) { return den > 0.0 ? num / den : 0.0; }

std::string format_number(double v)
{
    // Shortest representation that round-trips, same as the JSON writer.
    return json(v).dump();
}

}  // namespace

json layer_report_json(const LayerReport& lr)
{
    json trace = json::array();
    for (const auto& r : lr.penalty_trace.records) {
        trace.push_back({{"objective", r.objective},
                         {"penalty_term", r.penalty_term},
                         {"rho", r.rho},
                         {"changed", r.changed}});
    }
    return {{"index", lr.index},
            {"hidden_dim", lr.hidden_dim},
            {"lambda", lr.lambda},
            {"kept", static_cast<Index>(lr.keep.size())},
            {"keep", lr.keep},
            {"penalty_objective", lr.penalty_objective},
            {"oracle_objective", lr.oracle_objective ? json(*lr.oracle_objective) : json(nullptr)},
            {"oracle_gap", lr.oracle_gap ? json(*lr.oracle_gap) : json(nullptr)},
            {"reconstruction_error", lr.reconstruction_error},
            {"penalty_trace", trace},
            {"recovery_trace", lr.recovery_trace},
            {"warnings", lr.warnings}};
}

json prune_report_json(const PruneReport& report, const SparsityPlan& plan, const RunConfig& cfg)
{
    json layers = json::array();
    for (const auto& lr : report.layers) layers.push_back(layer_report_json(lr));

    json model = {
        {"dense_params", report.dense_params},
        {"pruned_params", report.pruned_params},
        {"params_ratio", ratio(static_cast<double>(report.pruned_params), static_cast<double>(report.dense_params))},
        {"cost_seq_len", report.cost_seq_len},
        {"dense_flops", report.dense_cost.flops},
        {"pruned_flops", report.pruned_cost.flops},
        {"flops_ratio", ratio(static_cast<double>(report.pruned_cost.flops), static_cast<double>(report.dense_cost.flops))},
        {"dense_bytes", report.dense_cost.bytes},
        {"pruned_bytes", report.pruned_cost.bytes},
        {"bytes_ratio", ratio(static_cast<double>(report.pruned_cost.bytes), static_cast<double>(report.dense_cost.bytes))},
        {"calibration_samples", report.calibration_samples},
        {"holdout_samples", report.holdout_samples},
        {"end_to_end_error", report.end_to_end_error},
        {"end_to_end_sq_error", report.end_to_end_sq_error},
    };

    return {{"format", report_format},
            {"kind", "prune"},
            {"seed", cfg.seed},
            {"config", config_to_json(cfg)},
            {"variant", std::string(to_string(report.variant))},
            {"sparsity",
             {{"overall", plan.overall_sparsity},
              {"mlp_share", plan.mlp_param_share},
              {"per_layer_lambda", plan.per_layer_lambda}}},
            {"layers", layers},
            {"model", model},
            {"notes", json::array({cost_model_note})}};
}

json sweep_report_json(const std::vector<SweepRow>& rows, Index dense_params, const RunConfig& cfg)
{
    json arr = json::array();
    for (const auto& r : rows) {
        arr.push_back({{"sparsity", r.sparsity},
                       {"variant", std::string(to_string(r.variant))},
                       {"per_layer_lambda", r.lambdas},
                       {"pruned_params", r.pruned_params},
                       {"end_to_end_error", r.end_to_end_error}});
    }
    std::vector<std::string> variants;
    for (auto v : cfg.sweep.variants) variants.emplace_back(to_string(v));
    return {{"format", report_format},
            {"kind", "sweep"},
            {"seed", cfg.seed},
            {"config", config_to_json(cfg)},
            {"variants", variants},
            {"dense_params", dense_params},
            {"sweep", arr},
            {"notes", json::array({cost_model_note})}};
}

std::string plot_series_csv(const json& report)
{
    struct Row
    {
        double sparsity;
        std::string variant;
        double error;
    };
    std::vector<std::string> variants;
    std::vector<Row> rows;

    try {
        if (!report.is_object() || !report.contains("kind")) throw ConfigError("missing 'kind'");
        const auto kind = report.at("kind").get<std::string>();
        if (kind == "sweep") {
            variants = report.at("variants").get<std::vector<std::string>>();
            for (const auto& r : report.at("sweep")) {
                rows.push_back({r.at("sparsity").get<double>(), r.at("variant").get<std::string>(),
                                r.at("end_to_end_error").get<double>()});
            }
        } else if (kind == "prune") {
            const auto v = report.at("variant").get<std::string>();
            variants.push_back(v);
            rows.push_back({report.at("sparsity").at("overall").get<double>(), v,
                            report.at("model").at("end_to_end_error").get<double>()});
        } else {
            throw ConfigError("unsupported report kind '" + kind + "'");
        }
    } catch (const json::exception& e) {
        throw ConfigError(std::string("malformed report: ") + e.what());
    } catch (const ConfigError& e) {
        throw ConfigError(std::string("malformed report: ") + e.what());
    }
    for (const auto& v : variants) parse_variant(v);

    std::map<double, std::map<std::string, double>> table;
    for (const auto& r : rows) {
        bool known = false;
        for (const auto& v : variants) known = known || v == r.variant;
        if (!known) throw ConfigError("malformed report: row variant '" + r.variant + "' not listed");
        table[r.sparsity][r.variant] = r.error;
    }

    std::ostringstream os;
    os << "sparsity";
    for (const auto& v : variants) os << ',' << v;
    os << '\n';
    for (const auto& [sparsity, by_variant] : table) {
        os << format_number(sparsity);
        for (const auto& v : variants) {
            os << ',';
            if (auto it = by_variant.find(v); it != by_variant.end()) os << format_number(it->second);
        }
        os << '\n';
    }
    return os.str();
}

}  // namespace spap
