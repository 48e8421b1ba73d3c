// Copyright 2026 The SRS Authors
// SPDX-License-Identifier: Apache-2.0

#include "srs/dpconv.hpp"

#include <cmath>
#include <numeric>

namespace srs::dpconv {

std::int64_t DPConvConfig::resolved_conv_b_groups() const {
  if (conv_b_groups > 0) return conv_b_groups;
  const std::int64_t g = std::gcd(c_info, hidden());
  return g > 0 ? g : 1;
}

void DPConvConfig::validate() const {
  require(c_in > 0 && c_out > 0 && k > 0 && c_info > 0, ErrorKind::kInvalidArgument,
          "DPConv channels and kernel size must be positive");
  require(k % 2 == 1, ErrorKind::kInvalidArgument, "DPConv kernel size must be odd to preserve H x W");
  const std::int64_t g = resolved_conv_b_groups();
  require(c_info % g == 0 && hidden() % g == 0, ErrorKind::kGroupDivisibility,
          "generator groups " + std::to_string(g) + " do not divide c_info " + std::to_string(c_info) +
              " and hidden " + std::to_string(hidden()));
}

template <typename T>
GeneratorNet<T>::GeneratorNet(const DPConvConfig& config, Rng& rng) : config_(config) {
  config.validate();
  conv_a = nn::Conv2d<T>({config.c_info, config.c_info, 1, 1, 0, 1, config.conv_a_bias}, rng);
  conv_b = nn::Conv2d<T>(
      {config.c_info, config.hidden(), 1, 1, 0, config.resolved_conv_b_groups(), config.conv_b_bias}, rng);
}

template <typename T>
Var<T> GeneratorNet<T>::forward(const Var<T>& informative) const {
  require(informative.value().rank() == 4 && informative.dim(1) == config_.c_info, ErrorKind::kShapeMismatch,
          "generator expects " + std::to_string(config_.c_info) + " informative channels, got " +
              shape_str(informative.shape()));
  return conv_b.forward(ops::adaptive_avg_pool1(conv_a.forward(informative)));
}

template <typename T>
void GeneratorNet<T>::collect(const std::string& prefix, nn::StateList<T>& out) {
  conv_a.collect(prefix + ".conv_a", out);
  conv_b.collect(prefix + ".conv_b", out);
}

template <typename T>
std::int64_t GeneratorNet<T>::flops(const Shape& informative) const {
  const Shape pooled{informative[0], config_.c_info, 1, 1};
  return conv_a.flops(informative) + shape_numel(informative) / informative[0] + conv_b.flops(pooled);
}

template <typename T>
Var<T> generate_kernel(const Var<T>& f_r, const GeneratorNet<T>& generator) {
  const auto& cfg = generator.config();
  Var<T> theta = generator.forward(f_r);
  const std::int64_t batch = f_r.dim(0);
  return ops::reshape(theta, {batch * cfg.c_out, cfg.c_in, cfg.k, cfg.k});
}

template <typename T>
Var<T> dpconv_apply(const Var<T>& f_s, const Var<T>& kernel) {
  require(f_s.value().rank() == 4, ErrorKind::kShapeMismatch, "DPConv input must be (B,C,H,W)");
  require(kernel.value().rank() == 4, ErrorKind::kShapeMismatch, "DPConv kernel must be 4-D");
  const std::int64_t batch = f_s.dim(0), c_in = f_s.dim(1), h = f_s.dim(2), w = f_s.dim(3);
  require(kernel.dim(0) % batch == 0, ErrorKind::kBatchKernelMismatch,
          "kernel rows " + std::to_string(kernel.dim(0)) + " are not a multiple of batch " + std::to_string(batch));
  require(kernel.dim(1) == c_in, ErrorKind::kShapeMismatch,
          "kernel expects " + std::to_string(kernel.dim(1)) + " input channels, got " + std::to_string(c_in));
  const std::int64_t k = kernel.dim(2);
  require(k == kernel.dim(3) && k % 2 == 1, ErrorKind::kInvalidArgument, "DPConv kernel must be square and odd");
  const std::int64_t c_out = kernel.dim(0) / batch;
  Var<T> packed = ops::reshape(f_s, {1, batch * c_in, h, w});
  Var<T> out = ops::conv2d(packed, kernel, Var<T>(), 1, nn::same_padding(k), batch);
  return ops::reshape(out, {batch, c_out, h, w});
}

template <typename T>
CombinationDynConv<T>::CombinationDynConv(std::int64_t n_kernels, std::int64_t c_in, std::int64_t c_out,
                                          std::int64_t k, Rng& rng)
    : n_kernels_(n_kernels), c_in_(c_in), c_out_(c_out), k_(k) {
  require(n_kernels > 0 && c_in > 0 && c_out > 0 && k > 0 && k % 2 == 1, ErrorKind::kInvalidArgument,
          "CombinationDynConv needs positive sizes and an odd kernel");
  const double fan_in = static_cast<double>(c_in * k * k);
  bank = Var<T>::parameter(rng_normal<T>(rng, {n_kernels, c_out, c_in, k, k}, static_cast<T>(std::sqrt(2.0 / fan_in))));
  attention_weight =
      Var<T>::parameter(rng_normal<T>(rng, {c_in, n_kernels}, static_cast<T>(1.0 / std::sqrt(static_cast<double>(c_in)))));
  attention_bias = Var<T>::parameter(BasicTensor<T>::zeros({n_kernels}));
}

template <typename T>
Var<T> CombinationDynConv<T>::coefficients(const Var<T>& x) const {
  require(x.value().rank() == 4 && x.dim(1) == c_in_, ErrorKind::kShapeMismatch,
          "CombinationDynConv expects " + std::to_string(c_in_) + " channels, got " + shape_str(x.shape()));
  Var<T> pooled = ops::reshape(ops::adaptive_avg_pool1(x), {x.dim(0), c_in_});
  return ops::softmax_rows(ops::add_row_bias(ops::matmul(pooled, attention_weight), attention_bias));
}

template <typename T>
Var<T> CombinationDynConv<T>::mixed_kernel(const Var<T>& alpha) const {
  const std::int64_t batch = alpha.dim(0);
  Var<T> flat_bank = ops::reshape(bank, {n_kernels_, c_out_ * c_in_ * k_ * k_});
  return ops::reshape(ops::matmul(alpha, flat_bank), {batch * c_out_, c_in_, k_, k_});
}

template <typename T>
Var<T> CombinationDynConv<T>::forward(const Var<T>& x) const {
  return dpconv_apply(x, mixed_kernel(coefficients(x)));
}

template <typename T>
void CombinationDynConv<T>::collect(const std::string& prefix, nn::StateList<T>& out) {
  out.params.push_back({prefix + ".bank", bank});
  out.params.push_back({prefix + ".attention.weight", attention_weight});
  out.params.push_back({prefix + ".attention.bias", attention_bias});
}

template <typename T>
BasicTensor<T> CombinationDynConv<T>::base_kernel(std::int64_t i) const {
  const std::int64_t len = c_out_ * c_in_ * k_ * k_;
  std::vector<T> data(bank.value().ptr() + i * len, bank.value().ptr() + (i + 1) * len);
  return BasicTensor<T>({c_out_, c_in_, k_, k_}, std::move(data));
}

template class GeneratorNet<float>;
template class GeneratorNet<double>;
template class CombinationDynConv<float>;
template class CombinationDynConv<double>;
template Var<float> generate_kernel(const Var<float>&, const GeneratorNet<float>&);
template Var<double> generate_kernel(const Var<double>&, const GeneratorNet<double>&);
template Var<float> dpconv_apply(const Var<float>&, const Var<float>&);
template Var<double> dpconv_apply(const Var<double>&, const Var<double>&);

}  // namespace srs::dpconv
