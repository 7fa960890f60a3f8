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

#include <spap/cli.hpp>
#include <spap/container.hpp>
#include <spap/report.hpp>

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <filesystem>
#include <iomanip>
#include <limits>
#include <sstream>

namespace spap {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Independent streams for the model, calibration and benchmark tokens.
constexpr std::uint64_t calib_stream = 0x9e3779b97f4a7c15ULL;
constexpr std::uint64_t bench_stream = 0xd1b54a32d192ed03ULL;

fs::path resolve(const RunConfig& cfg, const std::string& p)
{
    fs::path path(p);
    return path.is_relative() ? cfg.base_dir / path : path;
}

template <class F>
int guarded(std::ostream& err, F&& body)
{
    try {
        return body();
    } catch (const NumericError& e) {
        err << "spap: numerical failure: " << e.what() << '\n';
        return exit_numeric;
    } catch (const IoError& e) {
        err << "spap: I/O error: " << e.what() << '\n';
        return exit_io;
    } catch (const fs::filesystem_error& e) {
        err << "spap: I/O error: " << e.what() << '\n';
        return exit_io;
    } catch (const ConfigError& e) {
        err << "spap: configuration error: " << e.what() << '\n';
        return exit_config;
    } catch (const DimensionError& e) {
        err << "spap: configuration error: " << e.what() << '\n';
        return exit_config;
    } catch (const std::exception& e) {
        err << "spap: numerical failure: " << e.what() << '\n';
        return exit_numeric;
    }
}

fs::path require_out_dir(const CommandOptions& opts)
{
    if (opts.out_dir.empty()) throw ConfigError("--out <dir> is required");
    fs::path dir(opts.out_dir);
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create output directory " + dir.string() + ": " + ec.message());
    return dir;
}

void write_json(const fs::path& path, const json& j)
{
    write_file_atomic(path, j.dump(2) + "\n");
}

double seconds_forward(const ToyModel& model, const MatrixXd& tokens, int repeats)
{
    using clock = std::chrono::steady_clock;
    volatile double sink = model_forward(model, tokens)(0, 0);  // warm-up
    double best = std::numeric_limits<double>::infinity();
    for (int r = 0; r < repeats; ++r) {
        const auto t0 = clock::now();
        const MatrixXd out = model_forward(model, tokens);
        const auto t1 = clock::now();
        sink = sink + out(0, 0);
        best = std::min(best, std::chrono::duration<double>(t1 - t0).count());
    }
    (void)sink;
    return best;
}

}  // namespace

RunConfig resolve_config(const CommandOptions& opts)
{
    if (opts.config_path.empty()) throw ConfigError("--config <path> is required");
    RunConfig cfg = load_config(opts.config_path);
    if (opts.seed) cfg.seed = *opts.seed;
    if (opts.variant) cfg.variant = parse_variant(*opts.variant);
    return cfg;
}

RunInputs load_inputs(const RunConfig& cfg)
{
    RunInputs in;
    if (cfg.model.path) {
        in.model = model_from_entries(read_container(resolve(cfg, *cfg.model.path)), cfg.model.residual);
    } else {
        Rng rng(cfg.seed);
        in.model = random_model(cfg.model.layers, cfg.model.model_dim, cfg.model.hidden_dim,
                                cfg.model.residual, rng);
    }

    if (cfg.calibration.path) {
        const auto entries = read_container(resolve(cfg, *cfg.calibration.path));
        const auto* e = find_entry(entries, "calibration");
        if (!e) throw IoError("calibration container has no entry named 'calibration'");
        in.calibration = e->value;
    } else {
        Rng rng(cfg.seed ^ calib_stream);
        in.calibration = random_normal(in.model.model_dim(), cfg.calibration.samples, rng);
    }
    if (in.calibration.rows() != in.model.model_dim()) {
        throw ConfigError("calibration has " + std::to_string(in.calibration.rows()) +
                          " rows but the model dimension is " + std::to_string(in.model.model_dim()));
    }

    if (cfg.sparsity.per_layer_lambda) {
        in.plan.overall_sparsity = cfg.sparsity.overall;
        in.plan.mlp_param_share = cfg.sparsity.mlp_share;
        in.plan.per_layer_lambda = *cfg.sparsity.per_layer_lambda;
    } else {
        in.plan = make_plan(in.model, cfg.sparsity.overall, cfg.sparsity.mlp_share);
    }
    return in;
}

int cmd_prune(const CommandOptions& opts, std::ostream& out, std::ostream& err)
{
    return guarded(err, [&] {
        const RunConfig cfg = resolve_config(opts);
        const fs::path dir = require_out_dir(opts);
        const RunInputs in = load_inputs(cfg);
        const auto result = sequential_prune(in.model, in.calibration, in.plan, cfg.variant, cfg.pipeline());

        write_container(dir / "pruned.spap", model_to_entries(result.model));
        write_json(dir / "report.json", prune_report_json(result.report, in.plan, cfg));

        out << "variant " << to_string(cfg.variant) << ", params " << result.report.pruned_params << "/"
            << result.report.dense_params << ", held-out relative error " << result.report.end_to_end_error
            << '\n';
        for (const auto& lr : result.report.layers) {
            out << "  layer " << lr.index << ": kept " << lr.keep.size() << "/" << lr.hidden_dim;
            if (lr.oracle_gap) out << ", oracle gap " << *lr.oracle_gap;
            out << '\n';
        }
        return exit_ok;
    });
}

int cmd_sweep(const CommandOptions& opts, std::ostream& out, std::ostream& err)
{
    return guarded(err, [&] {
        const RunConfig cfg = resolve_config(opts);
        const fs::path dir = require_out_dir(opts);
        const RunInputs in = load_inputs(cfg);

        std::vector<SweepRow> rows;
        for (double s : cfg.sweep.sparsities) {
            const SparsityPlan plan = make_plan(in.model, s, cfg.sparsity.mlp_share);
            for (Variant v : cfg.sweep.variants) {
                const auto res = sequential_prune(in.model, in.calibration, plan, v, cfg.pipeline());
                rows.push_back({s, v, plan.per_layer_lambda, res.report.end_to_end_error, res.report.pruned_params});
                out << "sparsity " << s << " " << to_string(v) << ": " << res.report.end_to_end_error << '\n';
            }
        }
        write_json(dir / "sweep.json", sweep_report_json(rows, in.model.parameter_count(), cfg));
        return exit_ok;
    });
}

int cmd_oracle_compare(const CommandOptions& opts, std::ostream& out, std::ostream& err)
{
    return guarded(err, [&] {
        const RunConfig cfg = resolve_config(opts);
        const RunInputs in = load_inputs(cfg);
        for (std::size_t i = 0; i < in.model.layers.size(); ++i) {
            const Index n = in.model.layers[i].hidden_dim();
            const Index lambda = in.plan.per_layer_lambda.at(i);
            const auto count = binomial(n, lambda);
            if (count > cfg.oracle.max_subsets) {
                throw ConfigError("layer " + std::to_string(i) + ": C(" + std::to_string(n) + "," +
                                  std::to_string(lambda) + ") = " + std::to_string(count) +
                                  " subsets exceeds oracle.max_subsets = " + std::to_string(cfg.oracle.max_subsets));
            }
        }

        auto [x, held] = split_calibration(in.calibration, cfg.calibration.holdout_fraction);
        json rows = json::array();
        out << "layer,hidden_dim,lambda,subsets,penalty,magnitude,oracle,penalty_gap,magnitude_gap\n";
        for (std::size_t i = 0; i < in.model.layers.size(); ++i) {
            const Layer& layer = in.model.layers[i];
            const Index lambda = in.plan.per_layer_lambda[i];
            const MatrixXd z = glu_intermediate(layer, x);
            const MatrixXd y = layer.w_down * z;

            const auto orc = oracle_best_subset(z, y, lambda, cfg.oracle.max_subsets);
            const auto mag = magnitude_baseline(layer.w_down, z, y, lambda);
            const double pen = lambda == 0 ? orc.best_objective
                                           : static_cast<double>(penalty_prune(layer.w_down, z, y, lambda, cfg.penalty).objective);
            auto gap = [&](double v) { return orc.best_objective > 0.0 ? (v - orc.best_objective) / orc.best_objective : 0.0; };

            out << i << ',' << layer.hidden_dim() << ',' << lambda << ',' << orc.evaluated_subsets << ','
                << pen << ',' << mag.objective << ',' << orc.best_objective << ',' << gap(pen) << ','
                << gap(mag.objective) << '\n';
            rows.push_back({{"layer", i},
                            {"hidden_dim", layer.hidden_dim()},
                            {"lambda", lambda},
                            {"subsets", orc.evaluated_subsets},
                            {"penalty_objective", pen},
                            {"magnitude_objective", mag.objective},
                            {"oracle_objective", orc.best_objective},
                            {"oracle_keep", orc.best_keep},
                            {"penalty_gap", gap(pen)},
                            {"magnitude_gap", gap(mag.objective)}});

            MatrixXd next = glu_forward(layer, x).output;
            if (in.model.residual) next += x;
            x = std::move(next);
        }
        if (!opts.out_dir.empty()) {
            const fs::path dir = require_out_dir(opts);
            write_json(dir / "oracle.json",
                       {{"format", report_format}, {"kind", "oracle-compare"}, {"seed", cfg.seed},
                        {"config", config_to_json(cfg)}, {"layers", rows}});
        }
        return exit_ok;
    });
}

int cmd_bench(const CommandOptions& opts, std::ostream& out, std::ostream& err)
{
    return guarded(err, [&] {
        const RunConfig cfg = resolve_config(opts);
        const RunInputs in = load_inputs(cfg);
        Rng rng(cfg.seed ^ bench_stream);
        const MatrixXd tokens = random_normal(in.model.model_dim(), static_cast<Index>(cfg.bench.seq_len), rng);

        const CostEstimate dense_cost = analytic_cost(in.model, cfg.bench.seq_len);
        const double dense_seconds = seconds_forward(in.model, tokens, cfg.bench.repeats);

        json rows = json::array();
        out << "sparsity,flops_ratio,bytes_ratio,params_ratio,wall_ratio,speedup\n";
        for (double s : cfg.bench.sparsities) {
            ToyModel pruned = in.model;
            std::vector<Index> lambdas(in.model.layers.size(), 0);
            double seconds = dense_seconds;
            if (s > 0.0) {
                const SparsityPlan plan = make_plan(in.model, s, cfg.sparsity.mlp_share);
                lambdas = plan.per_layer_lambda;
                pruned = sequential_prune(in.model, in.calibration, plan, Variant::no_update, cfg.pipeline()).model;
                seconds = seconds_forward(pruned, tokens, cfg.bench.repeats);
            }
            const CostEstimate cost = analytic_cost(pruned, cfg.bench.seq_len);
            const double flops_ratio = static_cast<double>(cost.flops) / static_cast<double>(dense_cost.flops);
            const double bytes_ratio = static_cast<double>(cost.bytes) / static_cast<double>(dense_cost.bytes);
            const double params_ratio = static_cast<double>(pruned.parameter_count()) /
                                        static_cast<double>(in.model.parameter_count());
            const double wall_ratio = seconds / dense_seconds;

            out << std::fixed << std::setprecision(4) << s << ',' << flops_ratio << ',' << bytes_ratio << ','
                << params_ratio << ',' << wall_ratio << ',' << 1.0 / wall_ratio << '\n';
            out.unsetf(std::ios::floatfield);
            rows.push_back({{"sparsity", s},
                            {"per_layer_lambda", lambdas},
                            {"flops", cost.flops},
                            {"bytes", cost.bytes},
                            {"flops_ratio", flops_ratio},
                            {"bytes_ratio", bytes_ratio},
                            {"params_ratio", params_ratio},
                            {"seconds", seconds},
                            {"wall_ratio", wall_ratio},
                            {"speedup", 1.0 / wall_ratio}});
        }
        if (!opts.out_dir.empty()) {
            const fs::path dir = require_out_dir(opts);
            write_json(dir / "bench.json",
                       {{"format", report_format}, {"kind", "bench"}, {"seed", cfg.seed},
                        {"config", config_to_json(cfg)}, {"dense_flops", dense_cost.flops},
                        {"dense_bytes", dense_cost.bytes}, {"dense_seconds", dense_seconds},
                        {"rows", rows}, {"notes", json::array({cost_model_note})}});
        }
        return exit_ok;
    });
}

int cmd_plot_data(const CommandOptions& opts, std::ostream& out, std::ostream& err)
{
    return guarded(err, [&] {
        if (opts.report_path.empty()) throw ConfigError("--report <path> is required");
        const std::string text = read_file(opts.report_path);
        json report;
        try {
            report = json::parse(text);
        } catch (const json::parse_error& e) {
            throw ConfigError(std::string("malformed report: ") + e.what());
        }
        out << plot_series_csv(report);
        return exit_ok;
    });
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err)
{
    CLI::App app{"Structured pruning of GLU MLP blocks"};
    app.require_subcommand(1);

    CommandOptions opts;
    std::uint64_t seed = 0;
    std::string variant;

    auto add_run_flags = [&](CLI::App* sub) {
        sub->add_option("--config", opts.config_path, "Run configuration (JSON)")->required();
        sub->add_option("--out", opts.out_dir, "Output directory");
        sub->add_option("--seed", seed, "Override the configured seed");
        sub->add_option("--variant", variant, "full | no-update | gd-only")
            ->check(CLI::IsMember({"full", "no-update", "gd-only"}));
    };

    auto* prune = app.add_subcommand("prune", "Prune a model and write the pruned container and report");
    add_run_flags(prune);
    auto* sweep = app.add_subcommand("sweep", "Run every sweep sparsity and variant; write sweep.json");
    add_run_flags(sweep);
    auto* oracle = app.add_subcommand("oracle-compare", "Compare selection against exhaustive search per layer");
    add_run_flags(oracle);
    auto* bench = app.add_subcommand("bench", "Analytic cost and forward timing versus dense");
    add_run_flags(bench);
    auto* plot = app.add_subcommand("plot-data", "Emit (sparsity, error) CSV series from a report");
    plot->add_option("--report", opts.report_path, "Report JSON")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return exit_ok;
    } catch (const CLI::ParseError& e) {
        err << "spap: " << e.what() << '\n';
        return exit_config;
    }

    for (CLI::App* sub : {prune, sweep, oracle, bench}) {
        if (sub->parsed()) {
            if (sub->count("--seed")) opts.seed = seed;
            if (sub->count("--variant")) opts.variant = variant;
        }
    }

    if (prune->parsed()) return cmd_prune(opts, out, err);
    if (sweep->parsed()) return cmd_sweep(opts, out, err);
    if (oracle->parsed()) return cmd_oracle_compare(opts, out, err);
    if (bench->parsed()) return cmd_bench(opts, out, err);
    return cmd_plot_data(opts, out, err);
}

}  // namespace spap
