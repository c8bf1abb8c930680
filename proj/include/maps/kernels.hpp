#pragma once

#include "maps/types.hpp"

// Dense-layer kernels used by every network in the library.
//
// The production kernels split work into fixed-size column (or row) blocks
// and hand the blocks to OpenMP. Block boundaries do not depend on the
// thread count and blocks never share output, so results are bit-identical
// for any number of threads. The `reference` namespace holds plain scalar
// loops that the tests and the benchmark compare against.

namespace maps::kernels {

inline constexpr Eigen::Index kColumnBlock = 32;
inline constexpr Eigen::Index kRowBlock = 32;

/// out = weights * in + bias (broadcast over columns). `out` is resized.
void dense_forward(const Matrix& weights, const Vector& bias, const Matrix& in,
                   Matrix& out);

/// Accumulates weight_grad += out_grad * in^T and bias_grad += row sums of
/// out_grad. When `in_grad` is non-null it is overwritten with
/// weights^T * out_grad.
void dense_backward(const Matrix& weights, const Matrix& in,
                    const Matrix& out_grad, Matrix& weight_grad,
                    Vector& bias_grad, Matrix* in_grad);

/// out = tanh(pre), elementwise.
void tanh_forward(const Matrix& pre, Matrix& out);

/// grad *= 1 - act^2, with act = tanh(pre) from the forward pass.
void tanh_backward(const Matrix& act, Matrix& grad);

namespace reference {

void dense_forward(const Matrix& weights, const Vector& bias, const Matrix& in,
                   Matrix& out);
void dense_backward(const Matrix& weights, const Matrix& in,
                    const Matrix& out_grad, Matrix& weight_grad,
                    Vector& bias_grad, Matrix* in_grad);
void tanh_forward(const Matrix& pre, Matrix& out);
void tanh_backward(const Matrix& act, Matrix& grad);

}  // namespace reference

/// Number of OpenMP threads the parallel kernels will use.
int max_threads();

}  // namespace maps::kernels
