#pragma once

// Differentiable operation set. Every op validates shapes, computes its
// forward value with a fixed summation order, and registers a backward rule
// when any input lives on a tape. Broadcasting is limited to a row vector
// added across the leading dimension (add_row).

#include <cstddef>
#include <span>
#include <vector>

#include "smaug/diffcore/tensor.hpp"

namespace smaug::diff {

inline constexpr double kLayerNormEps = 1e-5;

/// [m,k] x [k,n] -> [m,n]
Tensor matmul(const Tensor& a, const Tensor& b);

Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
/// Elementwise product.
Tensor mul(const Tensor& a, const Tensor& b);
/// x[n,d] + row, row of shape [d] or [1,d].
Tensor add_row(const Tensor& x, const Tensor& row);
Tensor scale(const Tensor& x, double s);
/// x * s where s is a one-element tensor.
Tensor scale_by(const Tensor& x, const Tensor& s);
Tensor reciprocal(const Tensor& x);
Tensor exp(const Tensor& x);
Tensor log(const Tensor& x);

Tensor transpose(const Tensor& x);
Tensor reshape(const Tensor& x, Shape shape);
/// Rows of x (leading dimension) at `idx`; indices may repeat.
Tensor gather_rows(const Tensor& x, std::span<const std::size_t> idx);
/// Columns [start, start+len) of a rank-2 tensor.
Tensor slice_cols(const Tensor& x, std::size_t start, std::size_t len);
/// Concatenation of rank-2 tensors along axis 0 or 1.
Tensor concat(const std::vector<Tensor>& parts, std::size_t axis);

/// Reductions over one axis of a rank-2 tensor, keeping the axis with extent 1.
Tensor sum(const Tensor& x, std::size_t axis);
Tensor mean(const Tensor& x, std::size_t axis);
/// Scalar ([1]) reductions over every element.
Tensor sum_all(const Tensor& x);
Tensor mean_all(const Tensor& x);

/// Softmax over the last axis.
Tensor softmax(const Tensor& x);
/// Layer normalisation over the last axis with affine gamma/beta of shape [d].
Tensor layernorm(const Tensor& x, const Tensor& gamma, const Tensor& beta, double eps = kLayerNormEps);
/// GELU, tanh approximation.
Tensor gelu(const Tensor& x);
/// Row-wise L2 normalisation of a rank-2 tensor.
Tensor l2_normalize_rows(const Tensor& x);

/// Rows of `table` [V,d] at `ids`; rejects ids >= V.
Tensor embedding(const Tensor& table, std::span<const std::size_t> ids);

/// Mean over rows of -log softmax(logits)[target].
Tensor cross_entropy(const Tensor& logits, std::span<const std::size_t> targets);
/// Mean squared error over all elements.
Tensor mse(const Tensor& pred, const Tensor& target);

/// Forward value is exactly `hard`; the gradient passes straight through to `soft`.
Tensor straight_through(const Tensor& soft, const Tensor& hard);

}  // namespace smaug::diff
