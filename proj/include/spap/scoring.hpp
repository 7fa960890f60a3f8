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

#include <algorithm>
#include <numeric>
#include <string>

namespace spap {

/*
 * Relaxed pruning indicator s in [0,1]^n. Entry j = 1 marks channel j for
 * removal. A hard assignment is binary with exactly `target_lambda` ones.
 */
template <class Scalar>
struct PruneAssignment
{
    Vector<Scalar> values;
    Index target_lambda = 0;

    Index size() const { return values.size(); }

    bool in_unit_box() const
    {
        return (values.array() >= Scalar(0)).all() && (values.array() <= Scalar(1)).all();
    }

    bool is_hard() const
    {
        if (!in_unit_box()) return false;
        Index ones = 0;
        for (Index j = 0; j < values.size(); ++j) {
            if (values[j] == Scalar(1)) {
                ++ones;
            } else if (values[j] != Scalar(0)) {
                return false;
            }
        }
        return ones == target_lambda;
    }

    /// Channels with s_j == 0, ascending.
    IndexSet kept() const
    {
        IndexSet out;
        for (Index j = 0; j < values.size(); ++j)
            if (values[j] == Scalar(0)) out.push_back(j);
        return out;
    }

    /// Channels with s_j > 0, ascending.
    IndexSet support() const
    {
        IndexSet out;
        for (Index j = 0; j < values.size(); ++j)
            if (values[j] > Scalar(0)) out.push_back(j);
        return out;
    }
};

template <class Scalar>
struct ScoreVector
{
    Vector<Scalar> scores;

    Index size() const { return scores.size(); }
};

/// Which activation norm the activation-aware score term uses.
enum class FeatureNorm
{
    row,             // ||X[j,:]||_2: energy of input feature j across samples
    literal_column,  // ||X[:,j]||_2: sample column j (requires j < p)
};

/*
 * score[j] = t * ||W[:,j]||_2^2 + (1 - t) * ||W[:,j]||_1 * ||X[j,:]||_2
 *
 * W is (m x n) and X is (n x p), so feature j of X feeds column j of W.
 */
template <class Scalar>
ScoreVector<Scalar> composite_score(const Matrix<Scalar>& w, const Matrix<Scalar>& x, Scalar t,
                                    FeatureNorm norm = FeatureNorm::row)
{
    if (!(t >= Scalar(0) && t <= Scalar(1))) {
        throw ConfigError("composite_score: score mix t=" + std::to_string(t) + " outside [0,1]");
    }
    require_product_shape(w, x, "composite_score");
    const Index n = w.cols();

    Vector<Scalar> feature(n);
    if (norm == FeatureNorm::row) {
        feature = x.rowwise().norm();
    } else {
        if (x.cols() < n) {
            throw DimensionError("composite_score: literal column norm needs at least " +
                                 std::to_string(n) + " sample columns, got " + shape_str(x));
        }
        for (Index j = 0; j < n; ++j) feature[j] = x.col(j).norm();
    }

    ScoreVector<Scalar> out;
    out.scores.resize(n);
    for (Index j = 0; j < n; ++j) {
        const Scalar sq = w.col(j).squaredNorm();
        const Scalar l1 = w.col(j).template lpNorm<1>();
        out.scores[j] = t * sq + (Scalar(1) - t) * l1 * feature[j];
    }
    require_finite(out.scores, "composite_score");
    return out;
}

/// The lambda smallest scores get s_j = 1; ties go to the lower index.
template <class Scalar>
PruneAssignment<Scalar> hard_assign(const ScoreVector<Scalar>& scores, Index lambda)
{
    const Index n = scores.size();
    if (lambda <= 0 || lambda >= n) {
        throw ConfigError("hard_assign: lambda=" + std::to_string(lambda) + " must lie in (0, " +
                          std::to_string(n) + ")");
    }
    IndexSet order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), Index(0));
    std::stable_sort(order.begin(), order.end(),
                     [&](Index a, Index b) { return scores.scores[a] < scores.scores[b]; });

    PruneAssignment<Scalar> out;
    out.values = Vector<Scalar>::Zero(n);
    out.target_lambda = lambda;
    for (Index k = 0; k < lambda; ++k) out.values[order[static_cast<std::size_t>(k)]] = Scalar(1);
    return out;
}

/// alpha * prev + (1 - alpha) * hard_new.
template <class Scalar>
PruneAssignment<Scalar> soft_update(const PruneAssignment<Scalar>& prev,
                                    const PruneAssignment<Scalar>& hard_new, Scalar alpha)
{
    if (!(alpha > Scalar(0) && alpha < Scalar(1))) {
        throw ConfigError("soft_update: alpha=" + std::to_string(alpha) + " outside (0,1)");
    }
    if (prev.size() != hard_new.size()) {
        throw DimensionError("soft_update: length " + std::to_string(prev.size()) + " vs " +
                             std::to_string(hard_new.size()));
    }
    if (prev.target_lambda != hard_new.target_lambda) {
        throw ConfigError("soft_update: target lambda mismatch");
    }
    PruneAssignment<Scalar> out;
    out.target_lambda = prev.target_lambda;
    out.values = alpha * prev.values + (Scalar(1) - alpha) * hard_new.values;
    // Convex blends of [0,1] values stay in [0,1]; clamp rounding at the ends.
    out.values = out.values.cwiseMax(Scalar(0)).cwiseMin(Scalar(1));
    return out;
}

}  // namespace spap
