// Copyright 2026 The SRS Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Dynamic-parameter convolution. A compact generator maps an informative
// feature map to a flat vector of c_in * c_out * k^2 values per sample; the
// vector is reshaped into a (c_out, c_in, k, k) kernel and every sample of the
// input batch is convolved with its own kernel through one grouped
// convolution with groups = batch.
//
// CombinationDynConv is the classic alternative kept as a baseline: a fixed
// bank of kernels mixed per sample by softmax coefficients.

#include <cstdint>
#include <string>

#include "srs/layers.hpp"

namespace srs::dpconv {

struct DPConvConfig {
  std::int64_t c_in = 8;
  std::int64_t c_out = 1;
  std::int64_t k = 1;
  std::int64_t c_info = 64;
  // Groups of the second generator conv; 0 picks gcd(c_info, hidden()).
  std::int64_t conv_b_groups = 0;
  bool conv_a_bias = true;
  bool conv_b_bias = false;

  /// Values generated per sample: c_in * c_out * k^2.
  std::int64_t hidden() const { return c_in * c_out * k * k; }
  std::int64_t resolved_conv_b_groups() const;
  void validate() const;
  bool operator==(const DPConvConfig&) const = default;
};

/// conv_a (c_info -> c_info, 1x1) -> global average pool -> conv_b
/// (c_info -> hidden, 1x1, grouped). No activation in between.
template <typename T>
class GeneratorNet {
 public:
  GeneratorNet() = default;
  GeneratorNet(const DPConvConfig& config, Rng& rng);

  /// (B, c_info, H', W') -> (B, hidden, 1, 1)
  Var<T> forward(const Var<T>& informative) const;
  void collect(const std::string& prefix, nn::StateList<T>& out);
  std::int64_t param_count() const { return conv_a.param_count() + conv_b.param_count(); }
  std::int64_t flops(const Shape& informative) const;
  const DPConvConfig& config() const { return config_; }

  nn::Conv2d<T> conv_a;
  nn::Conv2d<T> conv_b;

 private:
  DPConvConfig config_;
};

/// Runs the generator on f_r and reshapes the result to the kernel layout
/// (B * c_out, c_in, k, k); rows [b * c_out, (b + 1) * c_out) belong to
/// sample b.
template <typename T>
Var<T> generate_kernel(const Var<T>& f_r, const GeneratorNet<T>& generator);

/// Convolves sample b of f_s (B, c_in, H, W) with kernel block b, via one
/// groups = B convolution over f_s viewed as (1, B * c_in, H, W). Padding is
/// floor((k - 1) / 2) and k must be odd, so the output is (B, c_out, H, W).
template <typename T>
Var<T> dpconv_apply(const Var<T>& f_s, const Var<T>& kernel);

template <typename T>
Var<T> dpconv_forward(const Var<T>& f_s, const Var<T>& f_r, const GeneratorNet<T>& generator) {
  return dpconv_apply(f_s, generate_kernel(f_r, generator));
}

/// Learnable parameters: conv_a weights and bias plus conv_b weights and bias.
template <typename T>
std::int64_t count_params(const GeneratorNet<T>& generator) {
  return generator.param_count();
}

/// Mixed kernel w_b = sum_i alpha_{b,i} w_i with alpha_b = softmax(linear(
/// global_pool(x_b))), applied per sample.
template <typename T>
class CombinationDynConv {
 public:
  CombinationDynConv() = default;
  CombinationDynConv(std::int64_t n_kernels, std::int64_t c_in, std::int64_t c_out, std::int64_t k, Rng& rng);

  /// (B, n_kernels) mixing coefficients; each row sums to one.
  Var<T> coefficients(const Var<T>& x) const;
  /// (B * c_out, c_in, k, k) per-sample mixed kernels.
  Var<T> mixed_kernel(const Var<T>& coefficients) const;
  Var<T> forward(const Var<T>& x) const;
  void collect(const std::string& prefix, nn::StateList<T>& out);

  std::int64_t n_kernels() const { return n_kernels_; }
  /// Base kernel i as a (c_out, c_in, k, k) tensor.
  BasicTensor<T> base_kernel(std::int64_t i) const;

  Var<T> bank;              // (n, c_out, c_in, k, k)
  Var<T> attention_weight;  // (c_in, n)
  Var<T> attention_bias;    // (n)

 private:
  std::int64_t n_kernels_ = 0;
  std::int64_t c_in_ = 0;
  std::int64_t c_out_ = 0;
  std::int64_t k_ = 0;
};

template <typename T>
Var<T> combination_dynconv_forward(const Var<T>& x, const CombinationDynConv<T>& layer) {
  return layer.forward(x);
}

}  // namespace srs::dpconv
