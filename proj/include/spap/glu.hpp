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

#include <string>

namespace spap {

/*
 * GLU-style MLP block:
 *
 *      out = W_down * ((W_up * x) .* swish(W_gate * x))
 *
 * with W_up, W_gate: (n x m) and W_down: (m x n), where m is the model
 * dimension and n the hidden dimension. Hidden channel i owns row i of W_up
 * and W_gate and column i of W_down.
 */
template <class Scalar>
struct GluLayer
{
    Matrix<Scalar> w_up;
    Matrix<Scalar> w_gate;
    Matrix<Scalar> w_down;

    GluLayer() = default;

    GluLayer(Matrix<Scalar> up, Matrix<Scalar> gate, Matrix<Scalar> down)
        : w_up(std::move(up)), w_gate(std::move(gate)), w_down(std::move(down))
    {
        validate();
    }

    Index hidden_dim() const { return w_up.rows(); }
    Index model_dim() const { return w_up.cols(); }
    Index parameter_count() const { return w_up.size() + w_gate.size() + w_down.size(); }

    void validate() const
    {
        const Index n = w_up.rows();
        const Index m = w_up.cols();
        if (w_gate.rows() != n || w_gate.cols() != m || w_down.rows() != m || w_down.cols() != n) {
            throw DimensionError("GluLayer: inconsistent shapes up=" + shape_str(w_up) + " gate=" +
                                 shape_str(w_gate) + " down=" + shape_str(w_down));
        }
        require_finite(w_up, "GluLayer w_up");
        require_finite(w_gate, "GluLayer w_gate");
        require_finite(w_down, "GluLayer w_down");
    }
};

template <class Scalar>
struct ActivationPair
{
    Matrix<Scalar> input;         // m x p
    Matrix<Scalar> intermediate;  // n x p
    Matrix<Scalar> output;        // m x p
};

namespace detail {

template <class Scalar>
void require_layer_input(const GluLayer<Scalar>& layer, const Matrix<Scalar>& x, const char* what)
{
    if (x.rows() != layer.model_dim()) {
        throw DimensionError(std::string(what) + ": input " + shape_str(x) +
                             " does not match layer model_dim " + std::to_string(layer.model_dim()));
    }
}

}  // namespace detail

/// Gated intermediate (W_up x) .* swish(W_gate x), shape n x p.
template <class Scalar>
Matrix<Scalar> glu_intermediate(const GluLayer<Scalar>& layer, const Matrix<Scalar>& x)
{
    detail::require_layer_input(layer, x, "glu_intermediate");
    const Matrix<Scalar> a = layer.w_up * x;
    const Matrix<Scalar> b = layer.w_gate * x;
    Matrix<Scalar> z = a.cwiseProduct(b.unaryExpr([](Scalar v) { return swish(v); }));
    require_finite(z, "glu_intermediate");
    return z;
}

template <class Scalar>
ActivationPair<Scalar> glu_forward(const GluLayer<Scalar>& layer, const Matrix<Scalar>& x)
{
    ActivationPair<Scalar> out;
    out.input = x;
    out.intermediate = glu_intermediate(layer, x);
    out.output = layer.w_down * out.intermediate;
    require_finite(out.output, "glu_forward");
    return out;
}

/*
 * Restricts the layer to the hidden channels in `keep` (order preserved):
 * rows of W_up/W_gate and columns of W_down. Dropping channel i removes
 * exactly its rank-one term from the output, so no error beyond that term
 * is introduced.
 */
template <class Scalar>
GluLayer<Scalar> prune_by_correspondence(const GluLayer<Scalar>& layer, const IndexSet& keep)
{
    if (keep.empty()) {
        throw ConfigError("prune_by_correspondence: keep set is empty");
    }
    std::vector<bool> seen(static_cast<std::size_t>(layer.hidden_dim()), false);
    for (const Index i : keep) {
        if (i < 0 || i >= layer.hidden_dim()) {
            throw ConfigError("prune_by_correspondence: channel index " + std::to_string(i) +
                              " out of range for hidden_dim " + std::to_string(layer.hidden_dim()));
        }
        if (seen[static_cast<std::size_t>(i)]) {
            throw ConfigError("prune_by_correspondence: duplicate channel index " + std::to_string(i));
        }
        seen[static_cast<std::size_t>(i)] = true;
    }
    return GluLayer<Scalar>(select_rows(layer.w_up, keep), select_rows(layer.w_gate, keep),
                            select_columns(layer.w_down, keep));
}

}  // namespace spap
