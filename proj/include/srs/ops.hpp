// Copyright 2026 The SRS Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Differentiable primitives over Var. Shapes must match exactly; there is no
// implicit broadcasting (bias terms are explicit per-channel ops).

#include <cstdint>
#include <vector>

#include "srs/autodiff.hpp"

namespace srs::ops {

template <typename T> Var<T> add(const Var<T>& a, const Var<T>& b);
template <typename T> Var<T> sub(const Var<T>& a, const Var<T>& b);
template <typename T> Var<T> mul(const Var<T>& a, const Var<T>& b);
template <typename T> Var<T> scale(const Var<T>& a, T factor);

/// Scalar (shape (1)) sum / mean of every element.
template <typename T> Var<T> sum(const Var<T>& a);
template <typename T> Var<T> mean(const Var<T>& a);

/// sum(a * weights) for a constant weight tensor.
template <typename T> Var<T> weighted_sum(const Var<T>& a, const BasicTensor<T>& weights);

template <typename T> Var<T> reshape(const Var<T>& a, Shape shape);

template <typename T> Var<T> relu(const Var<T>& a);
template <typename T> Var<T> sigmoid(const Var<T>& a);

/// Cross-correlation of x (B, C_in, H, W) with weight (C_out, C_in/groups,
/// Kh, Kw); `bias` may be undefined.
template <typename T>
Var<T> conv2d(const Var<T>& x, const Var<T>& weight, const Var<T>& bias, std::int64_t stride, std::int64_t pad,
              std::int64_t groups);

struct BatchNormOptions {
  bool training = true;
  double momentum = 0.1;
  double eps = 1e-5;
};

/// Per-channel normalization of (B, C, H, W). In training mode batch
/// statistics are used and the running statistics are updated in place; in
/// inference mode only the running statistics are read.
template <typename T>
Var<T> batch_norm(const Var<T>& x, const Var<T>& gamma, const Var<T>& beta, BasicTensor<T>& running_mean,
                  BasicTensor<T>& running_var, const BatchNormOptions& options);

/// 2x2 max pooling, stride 2. H and W must be even.
template <typename T> Var<T> max_pool2x2(const Var<T>& x);

/// Bilinear x2 upsampling with half-pixel centers (align_corners = false).
template <typename T> Var<T> upsample_bilinear2x(const Var<T>& x);

/// (B, C, H, W) -> (B, C, 1, 1) spatial mean.
template <typename T> Var<T> adaptive_avg_pool1(const Var<T>& x);

/// Concatenation along the channel axis.
template <typename T> Var<T> concat_channels(const std::vector<Var<T>>& parts);

/// (m, k) x (k, n) matrix product.
template <typename T> Var<T> matmul(const Var<T>& a, const Var<T>& b);

/// x (m, n) plus bias (n) on every row.
template <typename T> Var<T> add_row_bias(const Var<T>& x, const Var<T>& bias);

/// Row-wise softmax of an (m, n) matrix.
template <typename T> Var<T> softmax_rows(const Var<T>& x);

}  // namespace srs::ops
