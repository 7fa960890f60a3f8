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
#include <spap/scoring.hpp>

#include <optional>
#include <string>
#include <vector>

namespace spap {

// =======================================================================
// Penalty method for channel selection
// =======================================================================
//
// Solves, approximately,
//
//      min_{W,s} 0.5 ||W X - Y||_F^2 + (rho/2) sum_i s_i ||W[:,i]||^2
//      s.t.      1^T s = lambda, s in [0,1]^n
//
// by alternating a score-driven s update with a closed-form ridge W update
// while rho grows geometrically, then rounds s to a hard mask and refits the
// surviving columns by least squares.

struct PenaltyConfig
{
    int iterations = 15;
    double score_mix = 0.5;   // t
    double soft_alpha = 0.3;  // alpha
    std::optional<double> rho_init;    // unset: trace(X X^T) / n
    double rho_growth = 2.0;  // tau
    std::optional<double> stabilizer;  // unset: 1e-8 * mean(diag(X X^T))
    FeatureNorm feature_norm = FeatureNorm::row;

    void validate() const
    {
        if (iterations < 1) throw ConfigError("penalty.iterations must be >= 1");
        if (!(score_mix >= 0.0 && score_mix <= 1.0))
            throw ConfigError("penalty.score_mix must lie in [0,1]");
        if (!(soft_alpha > 0.0 && soft_alpha < 1.0))
            throw ConfigError("penalty.soft_alpha must lie in (0,1)");
        if (rho_init && !(*rho_init > 0.0)) throw ConfigError("penalty.rho_init must be > 0");
        if (!(rho_growth > 1.0)) throw ConfigError("penalty.rho_growth must be > 1");
        if (stabilizer && !(*stabilizer >= 0.0)) throw ConfigError("penalty.stabilizer must be >= 0");
    }
};

struct PenaltyRecord
{
    double objective;     // 0.5 ||W X - Y||_F^2
    double penalty_term;  // sum_i s_i ||W[:,i]||^2, i.e. the unweighted constraint residual
    double rho;
    Index changed;        // hard-pattern entries that flipped versus the previous iterate
};

/// Initial state plus one record per iteration, so K + 1 entries.
struct PenaltyTrace
{
    std::vector<PenaltyRecord> records;
};

template <class Scalar>
struct PenaltyResult
{
    Matrix<Scalar> w_pruned;  // m x (n - lambda), refit on the kept inputs
    IndexSet keep;
    IndexSet pruned;
    PruneAssignment<Scalar> final_assignment;
    Matrix<Scalar> w_last;    // penalized W after the final iteration, m x n
    Scalar objective = 0;     // 0.5 ||w_pruned X_keep - Y||_F^2
    PenaltyTrace trace;
};

namespace detail {

template <class Scalar>
void require_regression_shapes(const Matrix<Scalar>& x, const Matrix<Scalar>& y, const char* what)
{
    if (x.cols() != y.cols()) {
        throw DimensionError(std::string(what) + ": inputs " + shape_str(x) + " and targets " +
                             shape_str(y) + " disagree on sample count");
    }
}

template <class Scalar>
Scalar default_stabilizer(const Matrix<Scalar>& gram)
{
    if (gram.rows() == 0) return Scalar(0);
    return Scalar(1e-8) * gram.diagonal().mean();
}

template <class Scalar>
Scalar escalation_floor(const Matrix<Scalar>& gram)
{
    const Scalar mean = gram.rows() > 0 ? gram.diagonal().mean() : Scalar(0);
    return std::max(Scalar(1e-12) * mean, Scalar(1e-300));
}

}  // namespace detail

/// sum_i s_i ||W[:,i]||^2
template <class Scalar>
Scalar penalty_term(const Matrix<Scalar>& w, const Vector<Scalar>& s)
{
    return column_sq_norms(w).dot(s);
}

/// Gradient of 0.5||WX - Y||^2 + (rho/2) sum_i s_i ||W[:,i]||^2 with respect to W.
template <class Scalar>
Matrix<Scalar> penalized_gradient(const Matrix<Scalar>& w, const Matrix<Scalar>& x,
                                  const Matrix<Scalar>& y, const Vector<Scalar>& s, Scalar rho)
{
    Matrix<Scalar> g = (w * x - y) * x.transpose();
    g += rho * (w * s.asDiagonal());
    return g;
}

/*
 * W = Y X^T (X X^T + rho diag(s) + delta I)^{-1}, solved through a Cholesky
 * factorization of the (symmetric) system. On factorization failure delta is
 * escalated by x10 up to three times before giving up.
 */
template <class Scalar>
Matrix<Scalar> ridge_update(const Matrix<Scalar>& x, const Matrix<Scalar>& y,
                            const PruneAssignment<Scalar>& s, Scalar rho, Scalar delta)
{
    detail::require_regression_shapes(x, y, "ridge_update");
    if (s.size() != x.rows()) {
        throw DimensionError("ridge_update: assignment length " + std::to_string(s.size()) +
                             " does not match input features " + std::to_string(x.rows()));
    }
    if (!(rho >= Scalar(0))) throw ConfigError("ridge_update: rho must be >= 0");
    if (!(delta >= Scalar(0))) throw ConfigError("ridge_update: delta must be >= 0");

    Matrix<Scalar> gram = x * x.transpose();
    const Scalar floor = detail::escalation_floor(gram);
    gram.diagonal() += rho * s.values;
    const Matrix<Scalar> rhs = x * y.transpose();
    const Matrix<Scalar> wt = solve_with_escalation<Scalar>(gram, rhs, delta, floor, "ridge_update");
    Matrix<Scalar> w = wt.transpose();
    require_finite(w, "ridge_update");
    return w;
}

template <class Scalar>
PenaltyResult<Scalar> penalty_prune(const Matrix<Scalar>& w0, const Matrix<Scalar>& x,
                                    const Matrix<Scalar>& y, Index lambda, const PenaltyConfig& cfg)
{
    cfg.validate();
    require_product_shape(w0, x, "penalty_prune");
    detail::require_regression_shapes(x, y, "penalty_prune");
    if (y.rows() != w0.rows()) {
        throw DimensionError("penalty_prune: targets " + shape_str(y) + " do not match weight " +
                             shape_str(w0));
    }
    const Index n = w0.cols();
    if (lambda <= 0 || lambda >= n) {
        throw ConfigError("penalty_prune: lambda=" + std::to_string(lambda) + " must lie in (0, " +
                          std::to_string(n) + ")");
    }

    const Scalar t = static_cast<Scalar>(cfg.score_mix);
    const Scalar alpha = static_cast<Scalar>(cfg.soft_alpha);
    const Scalar tau = static_cast<Scalar>(cfg.rho_growth);

    const Matrix<Scalar> gram = x * x.transpose();
    const Scalar energy = gram.trace() / static_cast<Scalar>(n);
    Scalar rho = cfg.rho_init ? static_cast<Scalar>(*cfg.rho_init)
                              : (energy > Scalar(0) ? energy : Scalar(1));
    const Scalar delta = cfg.stabilizer ? static_cast<Scalar>(*cfg.stabilizer)
                                        : detail::default_stabilizer(gram);

    PenaltyResult<Scalar> result;
    auto& records = result.trace.records;
    records.reserve(static_cast<std::size_t>(cfg.iterations) + 1);

    Matrix<Scalar> w = w0;
    PruneAssignment<Scalar> s = hard_assign(composite_score(w, x, t, cfg.feature_norm), lambda);
    PruneAssignment<Scalar> prev_hard = s;
    records.push_back({static_cast<double>(frobenius_error(w, x, y)),
                       static_cast<double>(penalty_term(w, s.values)), static_cast<double>(rho), 0});

    for (int k = 0; k < cfg.iterations; ++k) {
        // s^{k+1/2} is rebuilt from scratch each iteration.
        const auto hard = hard_assign(composite_score(w, x, t, cfg.feature_norm), lambda);
        s = soft_update(s, hard, alpha);
        w = ridge_update(x, y, s, rho, delta);
        rho *= tau;

        Index changed = 0;
        for (Index j = 0; j < n; ++j) changed += hard.values[j] != prev_hard.values[j];
        prev_hard = hard;
        records.push_back({static_cast<double>(frobenius_error(w, x, y)),
                           static_cast<double>(penalty_term(w, s.values)), static_cast<double>(rho),
                           changed});
    }

    result.final_assignment = hard_assign(composite_score(w, x, t, cfg.feature_norm), lambda);
    result.keep = result.final_assignment.kept();
    result.pruned = result.final_assignment.support();
    result.w_last = std::move(w);

    const Matrix<Scalar> x_keep = select_rows(x, result.keep);
    result.w_pruned = least_squares_fit<Scalar>(x_keep, y, Scalar(0));
    require_finite(result.w_pruned, "penalty_prune");
    result.objective = frobenius_error(result.w_pruned, x_keep, y);
    return result;
}

}  // namespace spap
