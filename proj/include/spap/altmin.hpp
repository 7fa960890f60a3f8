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

#include <spap/core.hpp>
#include <spap/glu.hpp>

#include <cmath>
#include <optional>
#include <string>
#include <vector>

namespace spap {

// =======================================================================
// Weight recovery for a pruned GLU block
// =======================================================================
//
// Objective (squared Frobenius, no 1/2 factor):
//
//      f = || W_down (W_up X .* swish(W_gate X)) - Y ||_F^2
//
// Alternating minimization takes one Adam step on W_up and W_gate, then
// solves W_down exactly given the new intermediate Z.

struct AltMinConfig
{
    int iterations = 20;
    double learning_rate = 1e-3;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_eps = 1e-8;
    std::optional<double> down_stabilizer;  // unset: 1e-8 * mean(diag(Z Z^T))

    void validate() const
    {
        if (iterations < 0) throw ConfigError("altmin.iterations must be >= 0");
        if (!(learning_rate > 0.0)) throw ConfigError("altmin.learning_rate must be > 0");
        if (!(adam_beta1 > 0.0 && adam_beta1 < 1.0))
            throw ConfigError("altmin.adam_beta1 must lie in (0,1)");
        if (!(adam_beta2 > 0.0 && adam_beta2 < 1.0))
            throw ConfigError("altmin.adam_beta2 must lie in (0,1)");
        if (!(adam_eps > 0.0)) throw ConfigError("altmin.adam_eps must be > 0");
        if (down_stabilizer && !(*down_stabilizer >= 0.0))
            throw ConfigError("altmin.down_stabilizer must be >= 0");
    }
};

/*
 * Adam with bias correction:
 *
 *      m <- b1 m + (1 - b1) g
 *      v <- b2 v + (1 - b2) g^2
 *      p <- p - lr * (m / (1 - b1^t)) / (sqrt(v / (1 - b2^t)) + eps)
 */
template <class Scalar>
class AdamState
{
public:
    AdamState(Index rows, Index cols)
        : m_(Matrix<Scalar>::Zero(rows, cols)), v_(Matrix<Scalar>::Zero(rows, cols))
    {
    }

    long step_count() const { return t_; }
    const Matrix<Scalar>& first_moment() const { return m_; }
    const Matrix<Scalar>& second_moment() const { return v_; }

    void step(Matrix<Scalar>& param, const Matrix<Scalar>& grad, const AltMinConfig& cfg)
    {
        require_same_shape(param, grad, "AdamState::step");
        require_same_shape(param, m_, "AdamState::step");
        const Scalar b1 = static_cast<Scalar>(cfg.adam_beta1);
        const Scalar b2 = static_cast<Scalar>(cfg.adam_beta2);
        const Scalar lr = static_cast<Scalar>(cfg.learning_rate);
        const Scalar eps = static_cast<Scalar>(cfg.adam_eps);

        ++t_;
        m_ = b1 * m_ + (Scalar(1) - b1) * grad;
        v_ = b2 * v_ + (Scalar(1) - b2) * grad.cwiseProduct(grad);
        const Scalar c1 = Scalar(1) - std::pow(b1, static_cast<Scalar>(t_));
        const Scalar c2 = Scalar(1) - std::pow(b2, static_cast<Scalar>(t_));
        param.array() -= lr * (m_.array() / c1) / ((v_.array() / c2).sqrt() + eps);
        require_finite(param, "AdamState::step");
    }

private:
    Matrix<Scalar> m_;
    Matrix<Scalar> v_;
    long t_ = 0;
};

template <class Scalar>
struct MlpGradients
{
    Matrix<Scalar> up;
    Matrix<Scalar> gate;
    Matrix<Scalar> down;
};

template <class Scalar>
struct AltMinResult
{
    GluLayer<Scalar> layer;
    std::vector<double> objective_trace;  // initial objective, then one entry per iteration
    std::vector<std::string> warnings;
};

namespace detail {

template <class Scalar>
void require_mlp_shapes(const GluLayer<Scalar>& layer, const Matrix<Scalar>& x,
                        const Matrix<Scalar>& y, const char* what)
{
    layer.validate();
    require_layer_input(layer, x, what);
    if (y.rows() != layer.model_dim() || y.cols() != x.cols()) {
        throw DimensionError(std::string(what) + ": target " + shape_str(y) + " does not match " +
                             std::to_string(layer.model_dim()) + "x" + std::to_string(x.cols()));
    }
}

}  // namespace detail

template <class Scalar>
Scalar mlp_objective(const GluLayer<Scalar>& layer, const Matrix<Scalar>& x, const Matrix<Scalar>& y)
{
    detail::require_mlp_shapes(layer, x, y, "mlp_objective");
    const Matrix<Scalar> z = glu_intermediate(layer, x);
    return (layer.w_down * z - y).squaredNorm();
}

/*
 * With A = W_up X, B = W_gate X, Z = A .* swish(B), R = 2 (W_down Z - Y):
 *
 *      dW_down = R Z^T
 *      dW_up   = (W_down^T R .* swish(B)) X^T
 *      dW_gate = (W_down^T R .* A .* swish'(B)) X^T
 */
template <class Scalar>
MlpGradients<Scalar> mlp_gradients(const GluLayer<Scalar>& layer, const Matrix<Scalar>& x,
                                   const Matrix<Scalar>& y)
{
    detail::require_mlp_shapes(layer, x, y, "mlp_gradients");
    const Matrix<Scalar> a = layer.w_up * x;
    const Matrix<Scalar> b = layer.w_gate * x;
    const Matrix<Scalar> sb = b.unaryExpr([](Scalar v) { return swish(v); });
    const Matrix<Scalar> dsb = b.unaryExpr([](Scalar v) { return swish_grad(v); });
    const Matrix<Scalar> z = a.cwiseProduct(sb);
    const Matrix<Scalar> r = Scalar(2) * (layer.w_down * z - y);
    const Matrix<Scalar> back = layer.w_down.transpose() * r;

    MlpGradients<Scalar> g;
    g.down = r * z.transpose();
    g.up = back.cwiseProduct(sb) * x.transpose();
    g.gate = back.cwiseProduct(a).cwiseProduct(dsb) * x.transpose();
    require_finite(g.up, "mlp_gradients");
    require_finite(g.gate, "mlp_gradients");
    require_finite(g.down, "mlp_gradients");
    return g;
}

/// W_down = Y Z^T (Z Z^T + stabilizer I)^{-1}; exact block minimizer at stabilizer 0.
template <class Scalar>
Matrix<Scalar> down_closed_form(const Matrix<Scalar>& z, const Matrix<Scalar>& y, Scalar stabilizer)
{
    if (!(stabilizer >= Scalar(0))) throw ConfigError("down_closed_form: stabilizer must be >= 0");
    return least_squares_fit<Scalar>(z, y, stabilizer);
}

namespace detail {

template <class Scalar>
Scalar down_stabilizer(const Matrix<Scalar>& z, const AltMinConfig& cfg)
{
    if (cfg.down_stabilizer) return static_cast<Scalar>(*cfg.down_stabilizer);
    if (z.rows() == 0) return Scalar(0);
    return Scalar(1e-8) * z.rowwise().squaredNorm().mean();
}

template <class Scalar>
void warn_if_underdetermined(const GluLayer<Scalar>& layer, const Matrix<Scalar>& x,
                             std::vector<std::string>& warnings)
{
    if (x.cols() < layer.hidden_dim()) {
        warnings.push_back("calibration has " + std::to_string(x.cols()) + " samples but " +
                           std::to_string(layer.hidden_dim()) +
                           " hidden channels; the W_down solve relies on the stabilizer");
    }
}

}  // namespace detail

/*
 * Runs cfg.iterations rounds of {Adam on W_up and W_gate at the current
 * point; closed-form W_down}. The returned layer is the lowest-objective
 * iterate seen, so the result never scores worse than the input.
 */
template <class Scalar>
AltMinResult<Scalar> altmin_recover(const GluLayer<Scalar>& layer, const Matrix<Scalar>& x,
                                    const Matrix<Scalar>& y, const AltMinConfig& cfg)
{
    cfg.validate();
    detail::require_mlp_shapes(layer, x, y, "altmin_recover");

    AltMinResult<Scalar> out;
    detail::warn_if_underdetermined(layer, x, out.warnings);

    GluLayer<Scalar> cur = layer;
    Scalar best_obj = mlp_objective(cur, x, y);
    out.layer = cur;
    out.objective_trace.push_back(static_cast<double>(best_obj));

    AdamState<Scalar> adam_up(cur.w_up.rows(), cur.w_up.cols());
    AdamState<Scalar> adam_gate(cur.w_gate.rows(), cur.w_gate.cols());
    for (int k = 0; k < cfg.iterations; ++k) {
        const auto g = mlp_gradients(cur, x, y);
        adam_up.step(cur.w_up, g.up, cfg);
        adam_gate.step(cur.w_gate, g.gate, cfg);
        const Matrix<Scalar> z = glu_intermediate(cur, x);
        cur.w_down = down_closed_form(z, y, detail::down_stabilizer(z, cfg));

        const Scalar obj = mlp_objective(cur, x, y);
        out.objective_trace.push_back(static_cast<double>(obj));
        if (obj < best_obj) {
            best_obj = obj;
            out.layer = cur;
        }
    }
    return out;
}

/// Plain Adam on all three matrices with the same iteration budget.
template <class Scalar>
AltMinResult<Scalar> adam_recover(const GluLayer<Scalar>& layer, const Matrix<Scalar>& x,
                                  const Matrix<Scalar>& y, const AltMinConfig& cfg)
{
    cfg.validate();
    detail::require_mlp_shapes(layer, x, y, "adam_recover");

    AltMinResult<Scalar> out;
    GluLayer<Scalar> cur = layer;
    Scalar best_obj = mlp_objective(cur, x, y);
    out.layer = cur;
    out.objective_trace.push_back(static_cast<double>(best_obj));

    AdamState<Scalar> adam_up(cur.w_up.rows(), cur.w_up.cols());
    AdamState<Scalar> adam_gate(cur.w_gate.rows(), cur.w_gate.cols());
    AdamState<Scalar> adam_down(cur.w_down.rows(), cur.w_down.cols());
    for (int k = 0; k < cfg.iterations; ++k) {
        const auto g = mlp_gradients(cur, x, y);
        adam_up.step(cur.w_up, g.up, cfg);
        adam_gate.step(cur.w_gate, g.gate, cfg);
        adam_down.step(cur.w_down, g.down, cfg);

        const Scalar obj = mlp_objective(cur, x, y);
        out.objective_trace.push_back(static_cast<double>(obj));
        if (obj < best_obj) {
            best_obj = obj;
            out.layer = cur;
        }
    }
    return out;
}

}  // namespace spap
