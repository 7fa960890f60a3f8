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

#include <spap/config.hpp>
#include <spap/container.hpp>

#include <initializer_list>
#include <string_view>

namespace spap {

using nlohmann::json;

namespace {

void reject_unknown(const json& obj, std::string_view section, std::initializer_list<std::string_view> keys)
{
    if (!obj.is_object()) {
        throw ConfigError("config: '" + std::string(section) + "' must be an object");
    }
    for (const auto& item : obj.items()) {
        bool known = false;
        for (auto k : keys) known = known || item.key() == k;
        if (!known) {
            throw ConfigError("config: unknown key '" + item.key() + "' in " +
                              (section.empty() ? std::string("top level") : "'" + std::string(section) + "'"));
        }
    }
}

template <class T>
void read(const json& obj, const char* key, T& out, std::string_view section)
{
    if (!obj.contains(key)) return;
    try {
        out = obj.at(key).get<T>();
    } catch (const json::exception&) {
        throw ConfigError("config: bad value for '" + std::string(section) + "." + key + "'");
    }
}

template <class T>
void read_optional(const json& obj, const char* key, std::optional<T>& out, std::string_view section)
{
    if (!obj.contains(key)) return;
    if (obj.at(key).is_null()) {
        out.reset();
        return;
    }
    T v{};
    read(obj, key, v, section);
    out = v;
}

template <class T>
json optional_json(const std::optional<T>& v)
{
    return v ? json(*v) : json(nullptr);
}

FeatureNorm parse_feature_norm(const std::string& s)
{
    if (s == "row") return FeatureNorm::row;
    if (s == "literal-column") return FeatureNorm::literal_column;
    throw ConfigError("config: penalty.feature_norm must be 'row' or 'literal-column'");
}

std::string feature_norm_name(FeatureNorm f)
{
    return f == FeatureNorm::row ? "row" : "literal-column";
}

}  // namespace

void RunConfig::validate() const
{
    if (!model.path) {
        if (model.layers < 1 || model.model_dim < 1 || model.hidden_dim < 2) {
            throw ConfigError("config: model needs layers >= 1, model_dim >= 1, hidden_dim >= 2");
        }
    }
    if (!calibration.path && calibration.samples < 1) {
        throw ConfigError("config: calibration.samples must be >= 1");
    }
    if (!(calibration.holdout_fraction >= 0.0 && calibration.holdout_fraction < 1.0)) {
        throw ConfigError("config: calibration.holdout_fraction must lie in [0,1)");
    }
    if (!(sparsity.mlp_share > 0.0 && sparsity.mlp_share <= 1.0)) {
        throw ConfigError("config: sparsity.mlp_share=" + std::to_string(sparsity.mlp_share) +
                          " must lie in (0,1]");
    }
    if (!(sparsity.overall >= 0.0)) {
        throw ConfigError("config: sparsity.overall must be >= 0");
    }
    if (sparsity.overall >= sparsity.mlp_share) {
        throw ConfigError("config: sparsity.overall=" + std::to_string(sparsity.overall) +
                          " must be below sparsity.mlp_share=" + std::to_string(sparsity.mlp_share) +
                          "; MLP-only pruning cannot reach it");
    }
    for (double s : bench.sparsities) {
        if (!(s >= 0.0 && s < sparsity.mlp_share)) {
            throw ConfigError("config: bench sparsity " + std::to_string(s) + " outside [0, mlp_share)");
        }
    }
    for (double s : sweep.sparsities) {
        if (!(s >= 0.0 && s < sparsity.mlp_share)) {
            throw ConfigError("config: sweep sparsity " + std::to_string(s) + " outside [0, mlp_share)");
        }
    }
    if (bench.repeats < 1) throw ConfigError("config: bench.repeats must be >= 1");
    if (bench.seq_len < 1) throw ConfigError("config: bench.seq_len must be >= 1");
    penalty.validate();
    altmin.validate();
}

PipelineConfig RunConfig::pipeline() const
{
    PipelineConfig p;
    p.penalty = penalty;
    p.altmin = altmin;
    p.oracle_gap = oracle.enabled;
    p.oracle_guard = oracle.max_subsets;
    p.holdout_fraction = calibration.holdout_fraction;
    return p;
}

RunConfig config_from_json(const json& j)
{
    RunConfig c;
    reject_unknown(j, "", {"seed", "variant", "model", "calibration", "sparsity", "penalty", "altmin",
                           "oracle", "bench", "sweep"});
    read(j, "seed", c.seed, "");
    if (j.contains("variant")) {
        std::string v;
        read(j, "variant", v, "");
        c.variant = parse_variant(v);
    }

    if (j.contains("model")) {
        const auto& m = j.at("model");
        reject_unknown(m, "model", {"path", "layers", "model_dim", "hidden_dim", "residual"});
        read_optional(m, "path", c.model.path, "model");
        read(m, "layers", c.model.layers, "model");
        read(m, "model_dim", c.model.model_dim, "model");
        read(m, "hidden_dim", c.model.hidden_dim, "model");
        read(m, "residual", c.model.residual, "model");
    }
    if (j.contains("calibration")) {
        const auto& s = j.at("calibration");
        reject_unknown(s, "calibration", {"path", "samples", "holdout_fraction"});
        read_optional(s, "path", c.calibration.path, "calibration");
        read(s, "samples", c.calibration.samples, "calibration");
        read(s, "holdout_fraction", c.calibration.holdout_fraction, "calibration");
    }
    if (j.contains("sparsity")) {
        const auto& s = j.at("sparsity");
        reject_unknown(s, "sparsity", {"overall", "mlp_share", "per_layer_lambda"});
        read(s, "overall", c.sparsity.overall, "sparsity");
        read(s, "mlp_share", c.sparsity.mlp_share, "sparsity");
        read_optional(s, "per_layer_lambda", c.sparsity.per_layer_lambda, "sparsity");
    }
    if (j.contains("penalty")) {
        const auto& s = j.at("penalty");
        reject_unknown(s, "penalty", {"iterations", "score_mix", "soft_alpha", "rho_init", "rho_growth",
                                      "stabilizer", "feature_norm"});
        read(s, "iterations", c.penalty.iterations, "penalty");
        read(s, "score_mix", c.penalty.score_mix, "penalty");
        read(s, "soft_alpha", c.penalty.soft_alpha, "penalty");
        read_optional(s, "rho_init", c.penalty.rho_init, "penalty");
        read(s, "rho_growth", c.penalty.rho_growth, "penalty");
        read_optional(s, "stabilizer", c.penalty.stabilizer, "penalty");
        if (s.contains("feature_norm")) {
            std::string f;
            read(s, "feature_norm", f, "penalty");
            c.penalty.feature_norm = parse_feature_norm(f);
        }
    }
    if (j.contains("altmin")) {
        const auto& s = j.at("altmin");
        reject_unknown(s, "altmin", {"iterations", "learning_rate", "adam_beta1", "adam_beta2", "adam_eps",
                                     "down_stabilizer"});
        read(s, "iterations", c.altmin.iterations, "altmin");
        read(s, "learning_rate", c.altmin.learning_rate, "altmin");
        read(s, "adam_beta1", c.altmin.adam_beta1, "altmin");
        read(s, "adam_beta2", c.altmin.adam_beta2, "altmin");
        read(s, "adam_eps", c.altmin.adam_eps, "altmin");
        read_optional(s, "down_stabilizer", c.altmin.down_stabilizer, "altmin");
    }
    if (j.contains("oracle")) {
        const auto& s = j.at("oracle");
        reject_unknown(s, "oracle", {"enabled", "max_subsets"});
        read(s, "enabled", c.oracle.enabled, "oracle");
        read(s, "max_subsets", c.oracle.max_subsets, "oracle");
    }
    if (j.contains("bench")) {
        const auto& s = j.at("bench");
        reject_unknown(s, "bench", {"seq_len", "repeats", "sparsities"});
        read(s, "seq_len", c.bench.seq_len, "bench");
        read(s, "repeats", c.bench.repeats, "bench");
        read(s, "sparsities", c.bench.sparsities, "bench");
    }
    if (j.contains("sweep")) {
        const auto& s = j.at("sweep");
        reject_unknown(s, "sweep", {"sparsities", "variants"});
        read(s, "sparsities", c.sweep.sparsities, "sweep");
        if (s.contains("variants")) {
            std::vector<std::string> names;
            read(s, "variants", names, "sweep");
            c.sweep.variants.clear();
            for (const auto& n : names) c.sweep.variants.push_back(parse_variant(n));
        }
    }
    c.validate();
    return c;
}

json config_to_json(const RunConfig& c)
{
    json j;
    j["seed"] = c.seed;
    j["variant"] = std::string(to_string(c.variant));
    j["model"] = {{"path", optional_json(c.model.path)},
                  {"layers", c.model.layers},
                  {"model_dim", c.model.model_dim},
                  {"hidden_dim", c.model.hidden_dim},
                  {"residual", c.model.residual}};
    j["calibration"] = {{"path", optional_json(c.calibration.path)},
                        {"samples", c.calibration.samples},
                        {"holdout_fraction", c.calibration.holdout_fraction}};
    j["sparsity"] = {{"overall", c.sparsity.overall},
                     {"mlp_share", c.sparsity.mlp_share},
                     {"per_layer_lambda", optional_json(c.sparsity.per_layer_lambda)}};
    j["penalty"] = {{"iterations", c.penalty.iterations},
                    {"score_mix", c.penalty.score_mix},
                    {"soft_alpha", c.penalty.soft_alpha},
                    {"rho_init", optional_json(c.penalty.rho_init)},
                    {"rho_growth", c.penalty.rho_growth},
                    {"stabilizer", optional_json(c.penalty.stabilizer)},
                    {"feature_norm", feature_norm_name(c.penalty.feature_norm)}};
    j["altmin"] = {{"iterations", c.altmin.iterations},
                   {"learning_rate", c.altmin.learning_rate},
                   {"adam_beta1", c.altmin.adam_beta1},
                   {"adam_beta2", c.altmin.adam_beta2},
                   {"adam_eps", c.altmin.adam_eps},
                   {"down_stabilizer", optional_json(c.altmin.down_stabilizer)}};
    j["oracle"] = {{"enabled", c.oracle.enabled}, {"max_subsets", c.oracle.max_subsets}};
    j["bench"] = {{"seq_len", c.bench.seq_len}, {"repeats", c.bench.repeats}, {"sparsities", c.bench.sparsities}};
    std::vector<std::string> variants;
    for (auto v : c.sweep.variants) variants.emplace_back(to_string(v));
    j["sweep"] = {{"sparsities", c.sweep.sparsities}, {"variants", variants}};
    return j;
}

RunConfig load_config(const std::filesystem::path& path)
{
    const std::string text = read_file(path);
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError("config: cannot parse " + path.string() + ": " + e.what());
    }
    RunConfig c = config_from_json(j);
    c.base_dir = path.parent_path();
    return c;
}

}  // namespace spap
