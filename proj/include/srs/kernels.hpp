// Copyright 2026 The SRS Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Convolution kernels. conv2d_forward/conv2d_backward are the OpenMP-parallel
// im2col + GEMM implementations used by the engine; conv2d_naive is the serial
// direct-loop reference they are tested and benchmarked against.

#include <cstdint>
#include <type_traits>

#include "srs/tensor.hpp"

namespace srs::kernels {

struct ConvGeometry {
  std::int64_t batch = 0;
  std::int64_t in_channels = 0;
  std::int64_t in_h = 0;
  std::int64_t in_w = 0;
  std::int64_t out_channels = 0;
  std::int64_t kernel_h = 0;
  std::int64_t kernel_w = 0;
  std::int64_t stride = 1;
  std::int64_t pad = 0;
  std::int64_t groups = 1;
  std::int64_t out_h = 0;
  std::int64_t out_w = 0;

  std::int64_t in_per_group() const { return in_channels / groups; }
  std::int64_t out_per_group() const { return out_channels / groups; }
  // Rows of the im2col matrix for one group.
  std::int64_t patch_size() const { return in_per_group() * kernel_h * kernel_w; }
  std::int64_t out_pixels() const { return out_h * out_w; }
};

/// Validates x (B, C_in, H, W) against weight (C_out, C_in/groups, Kh, Kw).
/// The output extent (H + 2 pad - K) / stride + 1 must be integral.
ConvGeometry conv_geometry(const Shape& x, const Shape& weight, std::int64_t stride, std::int64_t pad,
                           std::int64_t groups);

template <typename T>
BasicTensor<T> conv2d_forward(const BasicTensor<T>& x, const BasicTensor<T>& weight, const std::type_identity_t<BasicTensor<T>>* bias,
                              std::int64_t stride, std::int64_t pad, std::int64_t groups);

template <typename T>
struct Conv2dGrads {
  BasicTensor<T> dx;
  BasicTensor<T> dweight;
  BasicTensor<T> dbias;
};

template <typename T>
Conv2dGrads<T> conv2d_backward(const BasicTensor<T>& x, const BasicTensor<T>& weight, const BasicTensor<T>& grad_out,
                               std::int64_t stride, std::int64_t pad, std::int64_t groups, bool need_dx,
                               bool need_dweight, bool need_dbias);

template <typename T>
BasicTensor<T> conv2d_naive(const BasicTensor<T>& x, const BasicTensor<T>& weight, const std::type_identity_t<BasicTensor<T>>* bias,
                            std::int64_t stride, std::int64_t pad, std::int64_t groups);

/// Row-major C(m x n) = A(m x k) * B(k x n), or C += when accumulate.
template <typename T>
void gemm(const T* a, const T* b, T* c, std::int64_t m, std::int64_t k, std::int64_t n, bool accumulate);

}  // namespace srs::kernels
