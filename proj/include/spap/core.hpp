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

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include <cmath>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace spap {

// =======================================================================
// Dense types
// =======================================================================

/*
 * All matrices are row-major. Weights are stored as (out x in), activations
 * as (features x samples): model dimension m, hidden dimension n, p samples.
 */
template <class Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

template <class Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using MatrixXd = Matrix<double>;
using VectorXd = Vector<double>;
using Index = Eigen::Index;
using IndexSet = std::vector<Index>;

// =======================================================================
// Errors
// =======================================================================

class Error : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

/// Shape mismatch between operands.
class DimensionError : public Error
{
public:
    using Error::Error;
};

/// Factorization failure, non-finite values, or other numerical breakdown.
class NumericError : public Error
{
public:
    using Error::Error;
};

/// Invalid argument or configuration value.
class ConfigError : public Error
{
public:
    using Error::Error;
};

class IoError : public Error
{
public:
    using Error::Error;
};

template <class Derived>
std::string shape_str(const Eigen::EigenBase<Derived>& m)
{
    std::ostringstream os;
    os << m.rows() << "x" << m.cols();
    return os.str();
}

template <class Derived>
void require_finite(const Eigen::DenseBase<Derived>& m, const char* what)
{
    if (!m.allFinite()) {
        throw NumericError(std::string(what) + ": result contains NaN or Inf");
    }
}

template <class A, class B>
void require_product_shape(const Eigen::EigenBase<A>& a, const Eigen::EigenBase<B>& b, const char* what)
{
    if (a.cols() != b.rows()) {
        throw DimensionError(std::string(what) + ": cannot multiply " + shape_str(a) + " by " +
                             shape_str(b));
    }
}

template <class A, class B>
void require_same_shape(const Eigen::EigenBase<A>& a, const Eigen::EigenBase<B>& b, const char* what)
{
    if (a.rows() != b.rows() || a.cols() != b.cols()) {
        throw DimensionError(std::string(what) + ": shape " + shape_str(a) + " does not match " +
                             shape_str(b));
    }
}

// =======================================================================
// Kernels
// =======================================================================

/*
 * Dense product. Eigen's GEMM is single-threaded here (EIGEN_DONT_PARALLELIZE
 * is set by the build) so the accumulation order is fixed for given shapes.
 */
template <class A, class B>
auto matmul(const Eigen::MatrixBase<A>& a, const Eigen::MatrixBase<B>& b)
{
    using Scalar = typename A::Scalar;
    require_product_shape(a, b, "matmul");
    Matrix<Scalar> out = a * b;
    require_finite(out, "matmul");
    return out;
}

/*
 * Solves a * Z = b for symmetric positive definite a with a Cholesky
 * factorization. Never forms an inverse.
 */
template <class A, class B>
auto spd_solve(const Eigen::MatrixBase<A>& a, const Eigen::MatrixBase<B>& b)
{
    using Scalar = typename A::Scalar;
    if (a.rows() != a.cols()) {
        throw DimensionError("spd_solve: matrix must be square, got " + shape_str(a));
    }
    if (b.rows() != a.rows()) {
        throw DimensionError("spd_solve: right-hand side " + shape_str(b) +
                             " does not match system " + shape_str(a));
    }
    if (!a.allFinite() || !b.allFinite()) {
        throw NumericError("spd_solve: non-finite input");
    }
    const Scalar scale = a.cwiseAbs().maxCoeff();
    if (a.rows() > 0 &&
        (a - a.transpose()).cwiseAbs().maxCoeff() > Scalar(1e-10) * std::max(scale, Scalar(1))) {
        throw NumericError("spd_solve: matrix is not symmetric");
    }

    Eigen::LLT<Matrix<Scalar>> llt(a);
    if (llt.info() != Eigen::Success) {
        throw NumericError("spd_solve: Cholesky factorization hit a non-positive pivot; "
                           "add a diagonal perturbation delta*I to the system");
    }
    Matrix<Scalar> z = llt.solve(b);
    if (!z.allFinite()) {
        throw NumericError("spd_solve: solution is not finite; "
                           "add a diagonal perturbation delta*I to the system");
    }
    return z;
}

/*
 * Solves (gram + delta*I) Z = rhs, retrying with delta escalated by x10 up to
 * three times when the factorization fails. A zero delta escalates from
 * `delta_floor`. Returns the solution; `delta_used` receives the final delta.
 */
template <class Scalar>
Matrix<Scalar> solve_with_escalation(const Matrix<Scalar>& gram, const Matrix<Scalar>& rhs,
                                     Scalar delta, Scalar delta_floor, const char* what,
                                     Scalar* delta_used = nullptr)
{
    constexpr int max_escalations = 3;
    const auto n = gram.rows();
    for (int attempt = 0;; ++attempt) {
        try {
            Matrix<Scalar> sys = gram;
            sys.diagonal().array() += delta;
            Matrix<Scalar> z = spd_solve(sys, rhs);
            if (delta_used) *delta_used = delta;
            return z;
        } catch (const NumericError& e) {
            if (attempt == max_escalations || n == 0) {
                std::ostringstream os;
                os << what << ": factorization failed after " << attempt
                   << " stabilizer escalations (delta=" << delta << "): " << e.what();
                throw NumericError(os.str());
            }
            delta = delta > 0 ? delta * Scalar(10) : delta_floor;
        }
    }
}

/// Numerically stable logistic function.
template <class Scalar>
Scalar sigmoid(Scalar x)
{
    if (x >= 0) {
        return Scalar(1) / (Scalar(1) + std::exp(-x));
    }
    const Scalar e = std::exp(x);
    return e / (Scalar(1) + e);
}

/// x * sigmoid(x).
template <class Scalar>
Scalar swish(Scalar x)
{
    return x * sigmoid(x);
}

template <class Scalar>
Scalar swish_grad(Scalar x)
{
    const Scalar s = sigmoid(x);
    return s * (Scalar(1) + x * (Scalar(1) - s));
}

/// Half squared Frobenius error: 0.5 * ||W X - Y||_F^2.
template <class W, class X, class Y>
auto frobenius_error(const Eigen::MatrixBase<W>& w, const Eigen::MatrixBase<X>& x,
                     const Eigen::MatrixBase<Y>& y)
{
    using Scalar = typename W::Scalar;
    require_product_shape(w, x, "frobenius_error");
    if (y.rows() != w.rows() || y.cols() != x.cols()) {
        throw DimensionError("frobenius_error: target " + shape_str(y) + " does not match W*X shape " +
                             std::to_string(w.rows()) + "x" + std::to_string(x.cols()));
    }
    const Matrix<Scalar> r = w * x - y;
    return Scalar(0.5) * r.squaredNorm();
}

/// Squared L2 norm of each column.
template <class Derived>
auto column_sq_norms(const Eigen::MatrixBase<Derived>& m)
{
    using Scalar = typename Derived::Scalar;
    Vector<Scalar> out = m.colwise().squaredNorm().transpose();
    return out;
}

/// Columns of `m` listed in `cols`, in the order given.
template <class Derived>
auto select_columns(const Eigen::MatrixBase<Derived>& m, const IndexSet& cols)
{
    using Scalar = typename Derived::Scalar;
    Matrix<Scalar> out(m.rows(), static_cast<Index>(cols.size()));
    for (Index j = 0; j < out.cols(); ++j) out.col(j) = m.col(cols[j]);
    return out;
}

/// Rows of `m` listed in `rows`, in the order given.
template <class Derived>
auto select_rows(const Eigen::MatrixBase<Derived>& m, const IndexSet& rows)
{
    using Scalar = typename Derived::Scalar;
    Matrix<Scalar> out(static_cast<Index>(rows.size()), m.cols());
    for (Index i = 0; i < out.rows(); ++i) out.row(i) = m.row(rows[i]);
    return out;
}

/*
 * Least-squares fit W = Y X^T (X X^T + delta I)^{-1}. `delta` = 0 gives the
 * plain normal-equations solution; escalation starts at 1e-12 * mean(diag)
 * when the Gram matrix is singular.
 */
template <class Scalar>
Matrix<Scalar> least_squares_fit(const Matrix<Scalar>& x, const Matrix<Scalar>& y, Scalar delta = 0)
{
    if (y.cols() != x.cols()) {
        throw DimensionError("least_squares_fit: inputs " + shape_str(x) + " and targets " +
                             shape_str(y) + " disagree on sample count");
    }
    if (x.rows() == 0) return Matrix<Scalar>(y.rows(), 0);
    const Matrix<Scalar> gram = x * x.transpose();
    const Matrix<Scalar> rhs = x * y.transpose();
    const Scalar floor = std::max(Scalar(1e-12) * gram.diagonal().mean(), Scalar(1e-300));
    Matrix<Scalar> wt = solve_with_escalation<Scalar>(gram, rhs, delta, floor, "least_squares_fit");
    Matrix<Scalar> w = wt.transpose();
    return w;
}

}  // namespace spap
