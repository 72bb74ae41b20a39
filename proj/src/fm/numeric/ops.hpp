// Copyright 2026 The flowmotion Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "fm/numeric/tape.hpp"

// Differentiable op set. Every op validates shapes and throws ShapeError with
// the op name and operand shapes on mismatch. The only implicit expansion is
// over leading dimensions: for binary ops the second operand may match the
// trailing dimensions of the first.
namespace fm::nc {

inline constexpr double kLayerNormEps = 1e-5;

/// a[..., K] x b[K, N] (or b[N, K] when transpose_b) -> [..., N].
template <typename T>
Var<T> matmul(Var<T> a, Var<T> b, bool transpose_b = false);

template <typename T>
Var<T> add(Var<T> a, Var<T> b);
template <typename T>
Var<T> sub(Var<T> a, Var<T> b);
template <typename T>
Var<T> mul(Var<T> a, Var<T> b);
template <typename T>
Var<T> scale(Var<T> a, T s);
template <typename T>
Var<T> add_scalar(Var<T> a, T s);

template <typename T>
Var<T> concat(std::span<const Var<T>> parts, int axis);
template <typename T>
Var<T> slice(Var<T> a, int axis, int64_t start, int64_t length);
/// Equal-size split along an axis.
template <typename T>
std::vector<Var<T>> split(Var<T> a, int axis, int64_t pieces);
template <typename T>
Var<T> reshape(Var<T> a, Shape shape);
/// Rank-2 transpose.
template <typename T>
Var<T> transpose(Var<T> a);

/// Normalises each row over the last dimension: (x - mean) / sqrt(var + eps).
template <typename T>
Var<T> layer_norm(Var<T> a, T eps = T(kLayerNormEps));
/// Row-wise softmax over the last dimension.
template <typename T>
Var<T> softmax(Var<T> a);
template <typename T>
Var<T> silu(Var<T> a);
/// tanh-approximated GELU.
template <typename T>
Var<T> gelu(Var<T> a);

/// t[n] (or scalar) -> [n, dim]: cos(t w_k) in the first half, sin(t w_k) in the second.
template <typename T>
Var<T> sinusoidal_embedding(Var<T> t, int64_t dim, T max_period = T(10000));

/// Row lookup: table[V, C], ids -> [len(ids), C].
template <typename T>
Var<T> gather(Var<T> table, std::span<const int64_t> ids);
/// Entries where mask != 0 are replaced by `value` and receive no gradient.
template <typename T>
Var<T> masked_fill(Var<T> a, std::span<const uint8_t> mask, T value);

template <typename T>
Var<T> sum(Var<T> a);
template <typename T>
Var<T> mean(Var<T> a);

/// Rotates channel pairs (2i, 2i+1) of each row by angles[row, i].
/// `angles` has shape [rows, C/2]. Angles are data, not differentiated.
template <typename T>
Var<T> rotary(Var<T> a, const Tensor<T>& angles);

/// Mean squared difference, a scalar.
template <typename T>
Var<T> mse(Var<T> a, Var<T> b) {
  auto d = sub(a, b);
  return mean(mul(d, d));
}

}  // namespace fm::nc
