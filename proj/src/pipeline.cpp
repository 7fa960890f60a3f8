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

#include <spap/pipeline.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>

namespace spap {

Index ToyModel::parameter_count() const
{
    Index total = 0;
    for (const auto& l : layers) total += l.parameter_count();
    return total;
}

void ToyModel::validate() const
{
    if (layers.empty()) throw ConfigError("ToyModel: no layers");
    const Index m = layers.front().model_dim();
    for (std::size_t i = 0; i < layers.size(); ++i) {
        layers[i].validate();
        if (layers[i].model_dim() != m) {
            throw DimensionError("ToyModel: layer " + std::to_string(i) + " has model_dim " +
                                 std::to_string(layers[i].model_dim()) + ", expected " +
                                 std::to_string(m));
        }
    }
}

MatrixXd model_forward(const ToyModel& model, const MatrixXd& x)
{
    MatrixXd cur = x;
    for (const auto& layer : model.layers) {
        MatrixXd out = glu_forward(layer, cur).output;
        if (model.residual) out += cur;
        cur = std::move(out);
    }
    return cur;
}

ToyModel random_model(Index layers, Index model_dim, Index hidden_dim, bool residual, Rng& rng)
{
    if (layers < 1 || model_dim < 1 || hidden_dim < 1) {
        throw ConfigError("random_model: layers, model_dim and hidden_dim must be positive");
    }
    ToyModel model;
    model.residual = residual;
    const double in_scale = 1.0 / std::sqrt(static_cast<double>(model_dim));
    const double out_scale = 1.0 / std::sqrt(static_cast<double>(hidden_dim));
    for (Index i = 0; i < layers; ++i) {
        MatrixXd up = random_normal(hidden_dim, model_dim, rng, in_scale);
        MatrixXd gate = random_normal(hidden_dim, model_dim, rng, in_scale);
        MatrixXd down = random_normal(model_dim, hidden_dim, rng, out_scale);
        model.layers.emplace_back(std::move(up), std::move(gate), std::move(down));
    }
    return model;
}

Index sparsity_to_lambda(double overall, const Layer& layer, double mlp_share)
{
    if (!(mlp_share > 0.0 && mlp_share <= 1.0)) {
        throw ConfigError("mlp_share=" + std::to_string(mlp_share) + " must lie in (0,1]");
    }
    if (!(overall > 0.0)) {
        throw ConfigError("overall sparsity=" + std::to_string(overall) + " must be > 0");
    }
    if (overall >= mlp_share) {
        throw ConfigError("overall sparsity " + std::to_string(overall) +
                          " cannot be reached by pruning MLP blocks holding a share of " +
                          std::to_string(mlp_share));
    }
    const Index n = layer.hidden_dim();
    if (n < 2) throw ConfigError("sparsity_to_lambda: layer needs at least 2 hidden channels");
    const auto lambda = static_cast<Index>(std::llround(static_cast<double>(n) * overall / mlp_share));
    return std::clamp<Index>(lambda, 1, n - 1);
}

SparsityPlan make_plan(const ToyModel& model, double overall, double mlp_share)
{
    SparsityPlan plan;
    plan.overall_sparsity = overall;
    plan.mlp_param_share = mlp_share;
    for (const auto& layer : model.layers) {
        plan.per_layer_lambda.push_back(overall == 0.0 ? 0 : sparsity_to_lambda(overall, layer, mlp_share));
    }
    return plan;
}

std::string_view to_string(Variant v)
{
    switch (v) {
    case Variant::full: return "full";
    case Variant::no_update: return "no-update";
    case Variant::gd_only: return "gd-only";
    }
    return "full";
}

Variant parse_variant(std::string_view s)
{
    if (s == "full") return Variant::full;
    if (s == "no-update") return Variant::no_update;
    if (s == "gd-only") return Variant::gd_only;
    throw ConfigError("unknown variant '" + std::string(s) + "' (expected full, no-update or gd-only)");
}

CostEstimate analytic_cost(const ToyModel& model, std::uint64_t seq_len)
{
    CostEstimate c;
    for (const auto& layer : model.layers) {
        const auto m = static_cast<std::uint64_t>(layer.model_dim());
        const auto n = static_cast<std::uint64_t>(layer.hidden_dim());
        c.flops += (6 * m * n + 5 * n) * seq_len;
        c.bytes += 3 * m * n * sizeof(double);
    }
    return c;
}

std::pair<MatrixXd, MatrixXd> split_calibration(const MatrixXd& calib, double holdout_fraction)
{
    if (!(holdout_fraction >= 0.0 && holdout_fraction < 1.0)) {
        throw ConfigError("holdout_fraction must lie in [0,1)");
    }
    const Index p = calib.cols();
    const auto held = static_cast<Index>(std::floor(static_cast<double>(p) * holdout_fraction));
    return {calib.leftCols(p - held), calib.rightCols(held)};
}

namespace {

void validate_plan(const ToyModel& model, const SparsityPlan& plan)
{
    if (plan.per_layer_lambda.size() != model.layers.size()) {
        throw ConfigError("sparsity plan has " + std::to_string(plan.per_layer_lambda.size()) +
                          " entries for " + std::to_string(model.layers.size()) + " layers");
    }
    for (std::size_t i = 0; i < model.layers.size(); ++i) {
        const Index lambda = plan.per_layer_lambda[i];
        const Index n = model.layers[i].hidden_dim();
        if (lambda < 0 || lambda >= n) {
            throw ConfigError("layer " + std::to_string(i) + ": lambda=" + std::to_string(lambda) +
                              " must lie in [0, " + std::to_string(n) + ")");
        }
    }
}

IndexSet all_channels(Index n)
{
    IndexSet keep(static_cast<std::size_t>(n));
    std::iota(keep.begin(), keep.end(), Index(0));
    return keep;
}

}  // namespace

PruneOutcome sequential_prune(const ToyModel& model, const MatrixXd& calib, const SparsityPlan& plan,
                              Variant variant, const PipelineConfig& cfg)
{
    model.validate();
    validate_plan(model, plan);
    cfg.penalty.validate();
    cfg.altmin.validate();
    if (calib.rows() != model.model_dim()) {
        throw DimensionError("calibration " + shape_str(calib) + " does not match model_dim " +
                             std::to_string(model.model_dim()));
    }
    auto [solve_x, held_x] = split_calibration(calib, cfg.holdout_fraction);
    Index max_hidden = 0;
    for (const auto& l : model.layers) max_hidden = std::max(max_hidden, l.hidden_dim());
    if (solve_x.cols() < max_hidden) {
        throw ConfigError("calibration split has " + std::to_string(solve_x.cols()) +
                          " samples; at least max hidden_dim = " + std::to_string(max_hidden) +
                          " are required");
    }

    PruneOutcome out;
    out.model.residual = model.residual;
    auto& report = out.report;
    report.variant = variant;
    report.calibration_samples = solve_x.cols();
    report.holdout_samples = held_x.cols();

    MatrixXd x = solve_x;
    for (std::size_t i = 0; i < model.layers.size(); ++i) {
        const Layer& dense = model.layers[i];
        const Index lambda = plan.per_layer_lambda[i];
        LayerReport lr;
        lr.index = static_cast<Index>(i);
        lr.hidden_dim = dense.hidden_dim();
        lr.lambda = lambda;

        const MatrixXd z = glu_intermediate(dense, x);
        const MatrixXd y = dense.w_down * z;

        Layer pruned = dense;
        if (lambda == 0) {
            lr.keep = all_channels(dense.hidden_dim());
        } else {
            try {
                auto sel = penalty_prune(dense.w_down, z, y, lambda, cfg.penalty);
                lr.keep = sel.keep;
                lr.penalty_trace = std::move(sel.trace);
                lr.penalty_objective = static_cast<double>(sel.objective);
                pruned = prune_by_correspondence(dense, sel.keep);
                pruned.w_down = std::move(sel.w_pruned);

                if (cfg.oracle_gap && binomial(dense.hidden_dim(), lambda) <= cfg.oracle_guard) {
                    const auto orc = oracle_best_subset(z, y, lambda, cfg.oracle_guard);
                    lr.oracle_objective = orc.best_objective;
                    lr.oracle_gap = orc.best_objective > 0.0
                                        ? (lr.penalty_objective - orc.best_objective) / orc.best_objective
                                        : 0.0;
                }

                if (variant != Variant::no_update) {
                    auto rec = variant == Variant::full ? altmin_recover(pruned, x, y, cfg.altmin)
                                                        : adam_recover(pruned, x, y, cfg.altmin);
                    pruned = std::move(rec.layer);
                    lr.recovery_trace = std::move(rec.objective_trace);
                    lr.warnings = std::move(rec.warnings);
                }
            } catch (const Error& e) {
                // Keep the concrete error category (numeric vs. config) for the caller.
                const std::string msg = "layer " + std::to_string(i) + ": " + e.what();
                if (dynamic_cast<const NumericError*>(&e)) throw NumericError(msg);
                if (dynamic_cast<const DimensionError*>(&e)) throw DimensionError(msg);
                throw ConfigError(msg);
            }
        }

        lr.reconstruction_error = static_cast<double>(mlp_objective(pruned, x, y));
        MatrixXd next = glu_forward(pruned, x).output;
        if (model.residual) next += x;
        x = std::move(next);

        out.model.layers.push_back(std::move(pruned));
        report.layers.push_back(std::move(lr));
    }

    report.dense_params = model.parameter_count();
    report.pruned_params = out.model.parameter_count();
    report.cost_seq_len = static_cast<std::uint64_t>(calib.cols());
    report.dense_cost = analytic_cost(model, report.cost_seq_len);
    report.pruned_cost = analytic_cost(out.model, report.cost_seq_len);

    const MatrixXd& eval_x = held_x.cols() > 0 ? held_x : solve_x;
    const MatrixXd ref = model_forward(model, eval_x);
    const MatrixXd got = model_forward(out.model, eval_x);
    report.end_to_end_sq_error = (got - ref).squaredNorm();
    const double denom = ref.squaredNorm();
    report.end_to_end_error = denom > 0.0 ? report.end_to_end_sq_error / denom : report.end_to_end_sq_error;
    return out;
}

}  // namespace spap
