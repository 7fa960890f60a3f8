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

#include <spap/altmin.hpp>
#include <spap/core.hpp>
#include <spap/glu.hpp>
#include <spap/oracle.hpp>
#include <spap/penalty.hpp>
#include <spap/rng.hpp>

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace spap {

using Layer = GluLayer<double>;

/// Stack of GLU blocks sharing the model dimension.
struct ToyModel
{
    std::vector<Layer> layers;
    bool residual = false;

    Index model_dim() const { return layers.empty() ? 0 : layers.front().model_dim(); }
    Index parameter_count() const;
    void validate() const;
};

/// Forward pass through every block; adds the block input back when `residual` is set.
MatrixXd model_forward(const ToyModel& model, const MatrixXd& x);

/*
 * Random model with weights scaled so activations stay O(1): W_up and W_gate
 * entries have variance 1/m, W_down entries variance 1/n.
 */
ToyModel random_model(Index layers, Index model_dim, Index hidden_dim, bool residual, Rng& rng);

struct SparsityPlan
{
    double overall_sparsity = 0.0;
    double mlp_param_share = 1.0;
    std::vector<Index> per_layer_lambda;
};

/*
 * Channels to prune in one layer so that MLP-only pruning reaches `overall`
 * sparsity of a model whose MLP blocks hold `mlp_share` of the parameters:
 * round(n * overall / mlp_share), clamped to [1, n - 1].
 */
Index sparsity_to_lambda(double overall, const Layer& layer, double mlp_share);

/// Uniform plan; overall = 0 gives lambda = 0 everywhere.
SparsityPlan make_plan(const ToyModel& model, double overall, double mlp_share);

enum class Variant
{
    full,       // penalty selection + alternating minimization
    no_update,  // penalty selection only
    gd_only,    // penalty selection + plain Adam on all three matrices
};

std::string_view to_string(Variant v);
Variant parse_variant(std::string_view s);

struct PipelineConfig
{
    PenaltyConfig penalty;
    AltMinConfig altmin;
    bool oracle_gap = false;
    std::uint64_t oracle_guard = default_oracle_guard;
    /// Trailing fraction of calibration samples held out from every solve.
    double holdout_fraction = 0.125;
};

struct LayerReport
{
    Index index = 0;
    Index hidden_dim = 0;
    Index lambda = 0;
    IndexSet keep;
    PenaltyTrace penalty_trace;
    double penalty_objective = 0.0;  // 0.5||W* Z_keep - Y||^2 after the selection refit
    std::optional<double> oracle_objective;
    std::optional<double> oracle_gap;  // (penalty - oracle) / oracle
    std::vector<double> recovery_trace;
    double reconstruction_error = 0.0;  // ||block(X) - Y||_F^2 on the calibration split
    std::vector<std::string> warnings;
};

struct CostEstimate
{
    std::uint64_t flops = 0;
    std::uint64_t bytes = 0;
};

/*
 * Analytic cost of the MLP blocks for `seq_len` tokens:
 *
 *      flops = sum_i (6 m n_i + 5 n_i) seq_len
 *      bytes = sum_i 3 m n_i * 8
 *
 * Three GEMMs at 2 m n flops per token each, plus 5 elementwise flops per
 * hidden activation (4 for swish, 1 for the gating product). Residual adds
 * and non-MLP parameters are outside the model.
 */
CostEstimate analytic_cost(const ToyModel& model, std::uint64_t seq_len);

struct PruneReport
{
    Variant variant = Variant::full;
    std::vector<LayerReport> layers;
    Index dense_params = 0;
    Index pruned_params = 0;
    CostEstimate dense_cost;
    CostEstimate pruned_cost;
    std::uint64_t cost_seq_len = 0;
    Index calibration_samples = 0;
    Index holdout_samples = 0;
    /// ||model'(X_h) - model(X_h)||_F^2 / ||model(X_h)||_F^2 on the held-out split.
    double end_to_end_error = 0.0;
    double end_to_end_sq_error = 0.0;
};

struct PruneOutcome
{
    ToyModel model;
    PruneReport report;
};

/*
 * Layer-wise pruning. Each block is calibrated on the activations reaching it
 * through the already-pruned upstream blocks; its targets are the dense
 * block's outputs on those same activations.
 */
PruneOutcome sequential_prune(const ToyModel& model, const MatrixXd& calib, const SparsityPlan& plan,
                              Variant variant, const PipelineConfig& cfg);

/// Splits calibration columns into (solve, held-out) parts.
std::pair<MatrixXd, MatrixXd> split_calibration(const MatrixXd& calib, double holdout_fraction);

}  // namespace spap
