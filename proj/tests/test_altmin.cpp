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

#include <spap/altmin.hpp>

#include <doctest.h>

using namespace spap;
using spap::testing::random_layer;
using spap::testing::rel_diff;

namespace {

double loop_objective(const GluLayer<double>& l, const MatrixXd& x, const MatrixXd& y)
{
    double total = 0.0;
    for (Index j = 0; j < x.cols(); ++j) {
        for (Index r = 0; r < y.rows(); ++r) {
            double out = 0.0;
            for (Index i = 0; i < l.hidden_dim(); ++i) {
                double a = 0.0, b = 0.0;
                for (Index c = 0; c < x.rows(); ++c) {
                    a += l.w_up(i, c) * x(c, j);
                    b += l.w_gate(i, c) * x(c, j);
                }
                out += l.w_down(r, i) * a * (b / (1.0 + std::exp(-b)));
            }
            const double d = out - y(r, j);
            total += d * d;
        }
    }
    return total;
}

}  // namespace

TEST_CASE("mlp_objective")
{
    Rng rng(1);
    const auto layer = random_layer(4, 6, rng);
    const MatrixXd x = random_normal(4, 10, rng);
    CHECK(mlp_objective(layer, x, MatrixXd(glu_forward(layer, x).output)) == 0.0);

    const GluLayer<double> zero(MatrixXd::Zero(3, 2), MatrixXd::Zero(3, 2), MatrixXd::Zero(2, 3));
    CHECK(mlp_objective(zero, MatrixXd(random_normal(2, 2, rng)), MatrixXd(MatrixXd::Ones(2, 2))) == 4.0);

    const MatrixXd y = random_normal(4, 10, rng);
    const double want = loop_objective(layer, x, y);
    CHECK(std::abs(mlp_objective(layer, x, y) - want) / want < 1e-12);
    CHECK_THROWS_AS(mlp_objective(layer, x, MatrixXd(MatrixXd::Zero(4, 9))), DimensionError);
}

TEST_CASE("mlp_gradients vanish at an exact fit")
{
    Rng rng(2);
    const auto layer = random_layer(4, 6, rng);
    const MatrixXd x = random_normal(4, 10, rng);
    const auto g = mlp_gradients(layer, x, MatrixXd(glu_forward(layer, x).output));
    CHECK(g.up.norm() == 0.0);
    CHECK(g.gate.norm() == 0.0);
    CHECK(g.down.norm() == 0.0);
}

TEST_CASE("mlp_gradients against central differences")
{
    Rng rng(3);
    auto layer = random_layer(5, 8, rng);
    const MatrixXd x = random_normal(5, 12, rng);
    const MatrixXd y = random_normal(5, 12, rng);
    const auto g = mlp_gradients(layer, x, y);
    const double h = 1e-5;

    auto probe = [&](MatrixXd GluLayer<double>::*member, const MatrixXd& grad) {
        for (int k = 0; k < 50; ++k) {
            MatrixXd& p = layer.*member;
            const Index r = static_cast<Index>(rng.below(static_cast<std::uint64_t>(p.rows())));
            const Index c = static_cast<Index>(rng.below(static_cast<std::uint64_t>(p.cols())));
            const double orig = p(r, c);
            p(r, c) = orig + h;
            const double fp = mlp_objective(layer, x, y);
            p(r, c) = orig - h;
            const double fm = mlp_objective(layer, x, y);
            p(r, c) = orig;
            const double fd = (fp - fm) / (2 * h);
            CHECK(std::abs(fd - grad(r, c)) <= 1e-4 * std::max(std::abs(grad(r, c)), 1e-3));
        }
    };
    probe(&GluLayer<double>::w_up, g.up);
    probe(&GluLayer<double>::w_gate, g.gate);
    probe(&GluLayer<double>::w_down, g.down);
}

TEST_CASE("mlp_gradients with zero targets")
{
    Rng rng(4);
    const auto layer = random_layer(3, 5, rng);
    const MatrixXd x = random_normal(3, 7, rng);
    const auto g = mlp_gradients(layer, x, MatrixXd(MatrixXd::Zero(3, 7)));
    const MatrixXd z = glu_intermediate(layer, x);
    CHECK(rel_diff(g.down, MatrixXd(2.0 * layer.w_down * z * z.transpose())) < 1e-12);
}

TEST_CASE("down_closed_form")
{
    Rng rng(5);
    const MatrixXd y = random_normal(3, 4, rng);
    CHECK(rel_diff(down_closed_form<double>(MatrixXd::Identity(4, 4), y, 0.0), y) < 1e-14);

    const MatrixXd c = random_normal(3, 5, rng);
    const MatrixXd z = random_normal(5, 20, rng);
    CHECK(rel_diff(down_closed_form<double>(z, MatrixXd(c * z), 0.0), c) < 1e-9);

    for (int k = 0; k < 50; ++k) {
        const auto layer = random_layer(4, 6, rng);
        const MatrixXd x = random_normal(4, 16, rng);
        const MatrixXd yy = random_normal(4, 16, rng);
        const MatrixXd zz = glu_intermediate(layer, x);
        const double stab = k % 2 ? 0.0 : 1e-8 * zz.rowwise().squaredNorm().mean();
        GluLayer<double> after = layer;
        after.w_down = down_closed_form(zz, yy, stab);
        CHECK(mlp_objective(after, x, yy) <= mlp_objective(layer, x, yy));
        const MatrixXd gd = 2.0 * (after.w_down * zz - yy) * zz.transpose();
        CHECK(gd.norm() <= 1e-6 * std::max(1.0, (yy * zz.transpose()).norm()));
    }
    CHECK_THROWS_AS(down_closed_form<double>(z, MatrixXd(c * z), -1.0), ConfigError);
}

TEST_CASE("Adam first step moves each entry by about the learning rate")
{
    AltMinConfig cfg;
    MatrixXd p = MatrixXd::Zero(2, 2);
    MatrixXd g(2, 2);
    g << 3.0, -0.5, 1e-3, -40.0;
    AdamState<double> st(2, 2);
    st.step(p, g, cfg);
    CHECK(st.step_count() == 1);
    for (Index i = 0; i < 4; ++i) {
        const double expect = -cfg.learning_rate * g(i) / (std::abs(g(i)) + cfg.adam_eps);
        CHECK(p(i) == doctest::Approx(expect).epsilon(1e-12));
    }
    CHECK(rel_diff(st.first_moment(), MatrixXd(0.1 * g)) < 1e-15);
}

TEST_CASE("altmin_recover keeps an exact fit")
{
    Rng rng(6);
    const auto layer = random_layer(4, 6, rng);
    const MatrixXd x = random_normal(4, 24, rng);
    const MatrixXd y = glu_forward(layer, x).output;
    const auto r = altmin_recover(layer, x, y, AltMinConfig{});
    CHECK(r.objective_trace.size() == 21);
    CHECK(r.objective_trace.front() == 0.0);
    CHECK((r.layer.w_up - layer.w_up).cwiseAbs().maxCoeff() <= 1e-8);
    CHECK((r.layer.w_gate - layer.w_gate).cwiseAbs().maxCoeff() <= 1e-8);
    CHECK((r.layer.w_down - layer.w_down).cwiseAbs().maxCoeff() <= 1e-8);
}

TEST_CASE("altmin_recover decreases from a far start")
{
    Rng rng(7);
    const auto target = random_layer(4, 8, rng);
    const auto start = random_layer(4, 8, rng);
    const MatrixXd x = random_normal(4, 40, rng);
    const MatrixXd y = glu_forward(target, x).output;
    AltMinConfig cfg;
    cfg.learning_rate = 1e-2;
    const auto r = altmin_recover(start, x, y, cfg);
    for (int k = 0; k < 5; ++k) CHECK(r.objective_trace[k + 1] < r.objective_trace[k]);
    CHECK(mlp_objective(r.layer, x, y) <= r.objective_trace.front());
}

TEST_CASE("altmin_recover warns when calibration is short")
{
    Rng rng(8);
    const auto layer = random_layer(3, 10, rng);
    const MatrixXd x = random_normal(3, 6, rng);
    const MatrixXd y = random_normal(3, 6, rng);
    const auto r = altmin_recover(layer, x, y, AltMinConfig{});
    CHECK(r.warnings.size() == 1);
    CHECK(r.objective_trace.back() <= r.objective_trace.front() + 1e-12);
}

TEST_CASE("AltMinConfig validation")
{
    AltMinConfig cfg;
    cfg.learning_rate = 0.0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = AltMinConfig{};
    cfg.adam_beta1 = 1.0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = AltMinConfig{};
    cfg.down_stabilizer = -1.0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
}
