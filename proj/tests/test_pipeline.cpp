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


#include "test_util.hpp"

#include <spap/pipeline.hpp>

#include <doctest.h>

using namespace spap;
using spap::testing::bitwise_equal;
using spap::testing::random_layer;

TEST_CASE("sparsity_to_lambda")
{
    Rng rng(1);
    const auto l100 = random_layer(2, 100, rng);
    const auto l1000 = random_layer(2, 1000, rng);
    const auto l64 = random_layer(2, 64, rng);
    CHECK(sparsity_to_lambda(0.30, l100, 1.0) == 30);
    CHECK(sparsity_to_lambda(0.30, l1000, 0.8740) == 343);
    CHECK(sparsity_to_lambda(0.10, l64, 0.8077) == 8);
    CHECK(sparsity_to_lambda(0.001, l100, 1.0) == 1);
    CHECK(sparsity_to_lambda(0.999, l1000, 1.0) == 999);

    try {
        sparsity_to_lambda(0.9, l100, 0.8740);
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        const std::string msg = e.what();
        CHECK(msg.find("0.9") != std::string::npos);
        CHECK(msg.find("0.874") != std::string::npos);
    }
}

TEST_CASE("analytic_cost")
{
    Rng rng(2);
    ToyModel model{{random_layer(64, 256, rng)}, false};
    const auto c = analytic_cost(model, 128);
    CHECK(c.flops == 12'582'912ULL + 5ULL * 256 * 128);
    CHECK(c.bytes == 3ULL * 64 * 256 * 8);

    ToyModel three = random_model(3, 16, 100, true, rng);
    ToyModel cut = three;
    IndexSet keep(70);
    for (Index i = 0; i < 70; ++i) keep[static_cast<std::size_t>(i)] = i;
    for (auto& l : cut.layers) l = prune_by_correspondence(l, keep);
    const auto d = analytic_cost(three, 64), p = analytic_cost(cut, 64);
    CHECK(static_cast<double>(p.flops) / static_cast<double>(d.flops) == doctest::Approx(0.70).epsilon(1e-12));
    CHECK(static_cast<double>(p.bytes) / static_cast<double>(d.bytes) == doctest::Approx(0.70).epsilon(1e-12));
}

TEST_CASE("variant names")
{
    CHECK(parse_variant("no-update") == Variant::no_update);
    CHECK(parse_variant("gd-only") == Variant::gd_only);
    CHECK(to_string(Variant::full) == "full");
    CHECK_THROWS_AS(parse_variant("fast"), ConfigError);
}

TEST_CASE("split_calibration holds out the last columns")
{
    Rng rng(3);
    const MatrixXd c = random_normal(3, 64, rng);
    const auto [solve, held] = split_calibration(c, 0.125);
    CHECK(solve.cols() == 56);
    CHECK(held.cols() == 8);
    CHECK(bitwise_equal(held, MatrixXd(c.rightCols(8))));
    CHECK(split_calibration(c, 0.0).second.cols() == 0);
}

TEST_CASE("sequential_prune with a zero plan leaves the model untouched")
{
    Rng rng(4);
    const ToyModel model = random_model(3, 8, 16, true, rng);
    const MatrixXd calib = random_normal(8, 64, rng);
    SparsityPlan plan = make_plan(model, 0.0, 1.0);
    CHECK(plan.per_layer_lambda == std::vector<Index>{0, 0, 0});
    for (auto v : {Variant::full, Variant::no_update, Variant::gd_only}) {
        const auto out = sequential_prune(model, calib, plan, v, PipelineConfig{});
        for (std::size_t i = 0; i < model.layers.size(); ++i) {
            CHECK(bitwise_equal(out.model.layers[i].w_up, model.layers[i].w_up));
            CHECK(bitwise_equal(out.model.layers[i].w_gate, model.layers[i].w_gate));
            CHECK(bitwise_equal(out.model.layers[i].w_down, model.layers[i].w_down));
        }
        CHECK(out.report.end_to_end_error == 0.0);
        CHECK(bitwise_equal(model_forward(out.model, calib), model_forward(model, calib)));
    }
}

TEST_CASE("sequential_prune single layer: full recovers at least as well as no update")
{
    Rng rng(5);
    for (int k = 0; k < 10; ++k) {
        const ToyModel model = random_model(1, 8, 16, false, rng);
        const MatrixXd calib = random_normal(8, 128, rng);
        const auto plan = make_plan(model, 0.3, 1.0);
        const auto full = sequential_prune(model, calib, plan, Variant::full, PipelineConfig{});
        const auto none = sequential_prune(model, calib, plan, Variant::no_update, PipelineConfig{});
        CHECK(full.report.layers[0].reconstruction_error <= none.report.layers[0].reconstruction_error);
    }
}

TEST_CASE("sequential_prune error grows with sparsity")
{
    Rng rng(6);
    const ToyModel model = random_model(3, 12, 32, true, rng);
    const MatrixXd calib = random_normal(12, 256, rng);
    double prev = 0.0;
    for (double s : {0.1, 0.2, 0.3}) {
        const auto out = sequential_prune(model, calib, make_plan(model, s, 1.0), Variant::full, PipelineConfig{});
        CHECK(out.report.end_to_end_error >= prev);
        prev = out.report.end_to_end_error;
    }
}

TEST_CASE("sequential_prune accounting and structure")
{
    Rng rng(7);
    const ToyModel model = random_model(3, 10, 24, true, rng);
    const MatrixXd calib = random_normal(10, 96, rng);
    const auto plan = make_plan(model, 0.25, 1.0);
    PipelineConfig cfg;
    cfg.oracle_gap = false;
    const auto out = sequential_prune(model, calib, plan, Variant::full, cfg);
    Index removed = 0;
    for (std::size_t i = 0; i < plan.per_layer_lambda.size(); ++i) {
        const Index lambda = plan.per_layer_lambda[i];
        removed += 3 * 10 * lambda;
        const auto& lr = out.report.layers[i];
        CHECK(static_cast<Index>(lr.keep.size()) == 24 - lambda);
        CHECK(out.model.layers[i].hidden_dim() == 24 - lambda);
        CHECK(lr.penalty_trace.records.size() == 16);
        CHECK(lr.recovery_trace.size() == 21);
    }
    CHECK(out.report.dense_params - out.report.pruned_params == removed);
    CHECK(out.report.holdout_samples == 12);
    CHECK(out.report.calibration_samples == 84);
    CHECK(out.report.cost_seq_len == 96);
}

TEST_CASE("sequential_prune failures")
{
    Rng rng(8);
    const ToyModel model = random_model(2, 4, 16, false, rng);
    const auto plan = make_plan(model, 0.3, 1.0);
    CHECK_THROWS_AS(sequential_prune(model, MatrixXd(random_normal(4, 12, rng)), plan, Variant::full, PipelineConfig{}),
                    ConfigError);
    CHECK_THROWS_AS(sequential_prune(model, MatrixXd(random_normal(5, 64, rng)), plan, Variant::full, PipelineConfig{}),
                    DimensionError);
    SparsityPlan bad = plan;
    bad.per_layer_lambda[1] = 16;
    try {
        sequential_prune(model, MatrixXd(random_normal(4, 64, rng)), bad, Variant::full, PipelineConfig{});
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("layer 1") != std::string::npos);
    }
}
