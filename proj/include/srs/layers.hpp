// Copyright 2026 The SRS Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "srs/autodiff.hpp"
#include "srs/ops.hpp"
#include "srs/rng.hpp"

namespace srs::nn {

template <typename T>
struct NamedParam {
  std::string name;
  Var<T> var;
};

template <typename T>
struct NamedBuffer {
  std::string name;
  BasicTensor<T>* tensor;
};

/// Flat, ordered view of a module tree's learnable parameters and
/// non-learnable buffers (normalization running statistics).
template <typename T>
struct StateList {
  std::vector<NamedParam<T>> params;
  std::vector<NamedBuffer<T>> buffers;

  std::int64_t param_count() const;
};

/// "Same" padding for odd kernels at stride 1: floor((K - 1) / 2).
constexpr std::int64_t same_padding(std::int64_t kernel) { return (kernel - 1) / 2; }

struct Conv2dSpec {
  std::int64_t in_channels = 1;
  std::int64_t out_channels = 1;
  std::int64_t kernel = 3;
  std::int64_t stride = 1;
  std::int64_t padding = -1;  // -1 selects same_padding(kernel)
  std::int64_t groups = 1;
  bool bias = true;
};

/// Convolution parameters: weight (C_out, C_in/groups, K, K), optional bias.
template <typename T>
class Conv2d {
 public:
  Conv2d() = default;
  /// Weights and bias drawn from U(-1/sqrt(fan_in), 1/sqrt(fan_in)).
  Conv2d(const Conv2dSpec& spec, Rng& rng);

  Var<T> forward(const Var<T>& x) const;
  void collect(const std::string& prefix, StateList<T>& out);
  Shape output_shape(const Shape& input) const;
  std::int64_t param_count() const;
  /// 2 * MAC plus one op per output for the bias, for one sample.
  std::int64_t flops(const Shape& input) const;

  const Conv2dSpec& spec() const { return spec_; }
  std::int64_t padding() const { return spec_.padding < 0 ? same_padding(spec_.kernel) : spec_.padding; }

  Var<T> weight;
  Var<T> bias;

 private:
  Conv2dSpec spec_;
};

/// Serial reference result for the same parameters (test oracle).
template <typename T>
BasicTensor<T> conv2d_naive(const BasicTensor<T>& x, const Conv2d<T>& conv);

template <typename T>
class BatchNorm2d {
 public:
  BatchNorm2d() = default;
  explicit BatchNorm2d(std::int64_t channels, double momentum = 0.1, double eps = 1e-5);

  Var<T> forward(const Var<T>& x);
  void collect(const std::string& prefix, StateList<T>& out);
  void set_training(bool training) { training_ = training; }
  bool training() const { return training_; }
  std::int64_t param_count() const { return gamma.numel() + beta.numel(); }

  Var<T> gamma;
  Var<T> beta;
  BasicTensor<T> running_mean;
  BasicTensor<T> running_var;

 private:
  double momentum_ = 0.1;
  double eps_ = 1e-5;
  bool training_ = true;
};

/// relu(bn2(conv2(relu(bn1(conv1(x)))))) + shortcut(x); the shortcut is the
/// identity, or a 1x1 projection when the channel count changes.
template <typename T>
class ResBlock {
 public:
  ResBlock() = default;
  ResBlock(std::int64_t in_channels, std::int64_t out_channels, Rng& rng);

  Var<T> forward(const Var<T>& x);
  void collect(const std::string& prefix, StateList<T>& out);
  void set_training(bool training);
  std::int64_t param_count() const;
  std::int64_t flops(const Shape& input) const;
  std::int64_t in_channels() const { return in_channels_; }
  std::int64_t out_channels() const { return out_channels_; }
  bool has_projection() const { return has_projection_; }

  Conv2d<T> conv1;
  BatchNorm2d<T> bn1;
  Conv2d<T> conv2;
  BatchNorm2d<T> bn2;
  Conv2d<T> projection;

 private:
  std::int64_t in_channels_ = 0;
  std::int64_t out_channels_ = 0;
  bool has_projection_ = false;
};

/// 2x2 max pooling.
template <typename T>
Var<T> downsample(const Var<T>& x) {
  return ops::max_pool2x2(x);
}

template <typename T>
Var<T> upsample(const Var<T>& x) {
  return ops::upsample_bilinear2x(x);
}

// Per-sample FLOP conventions for the parameter-free layers.
std::int64_t batch_norm_flops(const Shape& shape);
std::int64_t relu_flops(const Shape& shape);
std::int64_t max_pool_flops(const Shape& input);
std::int64_t upsample_flops(const Shape& input);

}  // namespace srs::nn
