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

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>

namespace spap {

// Reference solvers for the subset-selection problem
//
//      min_{|D| = lambda} min_W 0.5 ||W X_{keep} - Y||_F^2,   keep = {0..n-1} \ D.

struct OracleResult
{
    IndexSet best_keep;
    double best_objective = 0.0;
    std::uint64_t evaluated_subsets = 0;
};

struct BaselineResult
{
    IndexSet keep;
    double objective = 0.0;
};

/// C(n, k), saturating at uint64 max.
inline std::uint64_t binomial(Index n, Index k)
{
    if (k < 0 || k > n) return 0;
    k = std::min(k, n - k);
    std::uint64_t r = 1;
    for (Index i = 1; i <= k; ++i) {
        const std::uint64_t num = static_cast<std::uint64_t>(n - k + i);
        if (r > std::numeric_limits<std::uint64_t>::max() / num) {
            return std::numeric_limits<std::uint64_t>::max();
        }
        r = r * num / static_cast<std::uint64_t>(i);
    }
    return r;
}

inline constexpr std::uint64_t default_oracle_guard = 1'000'000;

/// Least-squares objective with only the input rows in `keep` available.
template <class Scalar>
Scalar refit_objective(const Matrix<Scalar>& x, const Matrix<Scalar>& y, const IndexSet& keep)
{
    const Matrix<Scalar> xk = select_rows(x, keep);
    const Matrix<Scalar> w = least_squares_fit<Scalar>(xk, y, Scalar(0));
    return frobenius_error(w, xk, y);
}

/*
 * Exhaustive search over all keep sets of size n - lambda, visited in
 * lexicographic order. The first set reaching the minimum wins ties.
 */
template <class Scalar>
OracleResult oracle_best_subset(const Matrix<Scalar>& x, const Matrix<Scalar>& y, Index lambda,
                                std::uint64_t guard = default_oracle_guard)
{
    if (x.cols() != y.cols()) {
        throw DimensionError("oracle_best_subset: inputs " + shape_str(x) + " and targets " +
                             shape_str(y) + " disagree on sample count");
    }
    const Index n = x.rows();
    if (lambda < 0 || lambda >= n) {
        throw ConfigError("oracle_best_subset: lambda=" + std::to_string(lambda) +
                          " must lie in [0, " + std::to_string(n) + ")");
    }
    const std::uint64_t count = binomial(n, lambda);
    if (count > guard) {
        throw ConfigError("oracle_best_subset: C(" + std::to_string(n) + "," + std::to_string(lambda) +
                          ") = " + std::to_string(count) + " subsets exceeds the guard of " +
                          std::to_string(guard));
    }

    const Index k = n - lambda;
    IndexSet keep(static_cast<std::size_t>(k));
    for (Index i = 0; i < k; ++i) keep[static_cast<std::size_t>(i)] = i;

    OracleResult best;
    best.best_objective = std::numeric_limits<double>::infinity();
    for (;;) {
        const double obj = static_cast<double>(refit_objective(x, y, keep));
        ++best.evaluated_subsets;
        if (obj < best.best_objective) {
            best.best_objective = obj;
            best.best_keep = keep;
        }
        // Advance to the next combination in lexicographic order.
        Index i = k - 1;
        while (i >= 0 && keep[static_cast<std::size_t>(i)] == n - k + i) --i;
        if (i < 0) break;
        ++keep[static_cast<std::size_t>(i)];
        for (Index j = i + 1; j < k; ++j)
            keep[static_cast<std::size_t>(j)] = keep[static_cast<std::size_t>(j - 1)] + 1;
    }
    return best;
}

/*
 * Drops the lambda columns of w0 with the smallest L2 norm (ties to the
 * lower index) and refits the rest by least squares.
 */
template <class Scalar>
BaselineResult magnitude_baseline(const Matrix<Scalar>& w0, const Matrix<Scalar>& x,
                                  const Matrix<Scalar>& y, Index lambda)
{
    require_product_shape(w0, x, "magnitude_baseline");
    if (y.rows() != w0.rows() || y.cols() != x.cols()) {
        throw DimensionError("magnitude_baseline: targets " + shape_str(y) + " do not match " +
                             std::to_string(w0.rows()) + "x" + std::to_string(x.cols()));
    }
    BaselineResult out;
    if (lambda == 0) {
        out.keep.resize(static_cast<std::size_t>(w0.cols()));
        for (Index j = 0; j < w0.cols(); ++j) out.keep[static_cast<std::size_t>(j)] = j;
    } else {
        ScoreVector<Scalar> norms{w0.colwise().norm().transpose()};
        out.keep = hard_assign(norms, lambda).kept();
    }
    out.objective = static_cast<double>(refit_objective(x, y, out.keep));
    return out;
}

/*
 * Checks feasibility of a relaxed solution (W, s): s in [0,1]^n,
 * 1^T s = lambda, and W[:,i] = 0 wherever s_i > 0. Returns a description of
 * the first violation, or nothing when feasible.
 */
template <class Scalar>
std::optional<std::string> relaxed_violation(const Matrix<Scalar>& w, const Vector<Scalar>& s,
                                             Index lambda, Scalar tol = Scalar(1e-10))
{
    if (s.size() != w.cols()) return "indicator length does not match weight columns";
    for (Index i = 0; i < s.size(); ++i) {
        if (!(s[i] >= Scalar(0) && s[i] <= Scalar(1)))
            return "s[" + std::to_string(i) + "] outside [0,1]";
    }
    if (std::abs(s.sum() - static_cast<Scalar>(lambda)) > tol * std::max<Scalar>(1, lambda))
        return "sum(s) differs from lambda";
    for (Index i = 0; i < s.size(); ++i) {
        if (s[i] > Scalar(0) && w.col(i).norm() > tol)
            return "W[:," + std::to_string(i) + "] is nonzero while s is positive";
    }
    return std::nullopt;
}

/*
 * Binarizes a feasible relaxed solution (W, s): picks a lambda-subset J of
 * supp(s) (the first lambda support indices unless `chosen` is given) and
 * returns s' with s'_i = 1 on J and 0 elsewhere. W is left untouched, so
 * (W, s') is feasible with the same objective for any data (X, Y).
 */
template <class Scalar>
Vector<Scalar> theorem1_roundtrip(const Matrix<Scalar>& w, const Vector<Scalar>& s, Index lambda,
                                  const std::optional<IndexSet>& chosen = std::nullopt)
{
    if (auto why = relaxed_violation(w, s, lambda)) {
        throw ConfigError("theorem1_roundtrip: infeasible input: " + *why);
    }
    IndexSet support;
    for (Index i = 0; i < s.size(); ++i)
        if (s[i] > Scalar(0)) support.push_back(i);
    if (static_cast<Index>(support.size()) < lambda) {
        throw ConfigError("theorem1_roundtrip: support has " + std::to_string(support.size()) +
                          " entries, fewer than lambda=" + std::to_string(lambda));
    }

    IndexSet j_set;
    if (chosen) {
        j_set = *chosen;
        if (static_cast<Index>(j_set.size()) != lambda)
            throw ConfigError("theorem1_roundtrip: chosen subset must have lambda entries");
        for (const Index i : j_set) {
            if (i < 0 || i >= s.size() || !(s[i] > Scalar(0)))
                throw ConfigError("theorem1_roundtrip: chosen index " + std::to_string(i) +
                                  " is outside supp(s)");
        }
    } else {
        j_set.assign(support.begin(), support.begin() + lambda);
    }

    Vector<Scalar> out = Vector<Scalar>::Zero(s.size());
    for (const Index i : j_set) {
        if (out[i] != Scalar(0)) throw ConfigError("theorem1_roundtrip: duplicate chosen index");
        out[i] = Scalar(1);
    }
    if (auto why = relaxed_violation(w, out, lambda)) {
        throw NumericError("theorem1_roundtrip: binarized solution infeasible: " + *why);
    }
    return out;
}

}  // namespace spap
