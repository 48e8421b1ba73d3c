// Copyright 2026 The SRS Authors
// SPDX-License-Identifier: Apache-2.0

#include "srs/layers.hpp"

#include <cmath>

#include "srs/kernels.hpp"

namespace srs::nn {

namespace {

std::int64_t per_sample_numel(const Shape& shape) { return shape_numel(shape) / shape[0]; }

}  // namespace

template <typename T>
std::int64_t StateList<T>::param_count() const {
  std::int64_t n = 0;
  for (const auto& p : params) n += p.var.numel();
  return n;
}

template <typename T>
Conv2d<T>::Conv2d(const Conv2dSpec& spec, Rng& rng) : spec_(spec) {
  require(spec.in_channels > 0 && spec.out_channels > 0 && spec.kernel > 0 && spec.stride > 0,
          ErrorKind::kInvalidArgument, "conv2d dimensions must be positive");
  require(spec.groups > 0 && spec.in_channels % spec.groups == 0 && spec.out_channels % spec.groups == 0,
          ErrorKind::kGroupDivisibility,
          "conv2d channels " + std::to_string(spec.in_channels) + "->" + std::to_string(spec.out_channels) +
              " not divisible by groups " + std::to_string(spec.groups));
  const std::int64_t cin_g = spec.in_channels / spec.groups;
  const double fan_in = static_cast<double>(cin_g * spec.kernel * spec.kernel);
  const auto bound = static_cast<T>(1.0 / std::sqrt(fan_in));
  weight = Var<T>::parameter(rng_uniform<T>(rng, {spec.out_channels, cin_g, spec.kernel, spec.kernel}, -bound, bound));
  if (spec.bias) bias = Var<T>::parameter(rng_uniform<T>(rng, {spec.out_channels}, -bound, bound));
}

template <typename T>
Var<T> Conv2d<T>::forward(const Var<T>& x) const {
  return ops::conv2d(x, weight, bias, spec_.stride, padding(), spec_.groups);
}

template <typename T>
void Conv2d<T>::collect(const std::string& prefix, StateList<T>& out) {
  out.params.push_back({prefix + ".weight", weight});
  if (bias.defined()) out.params.push_back({prefix + ".bias", bias});
}

template <typename T>
Shape Conv2d<T>::output_shape(const Shape& input) const {
  const auto g = kernels::conv_geometry(input, weight.shape(), spec_.stride, padding(), spec_.groups);
  return {g.batch, g.out_channels, g.out_h, g.out_w};
}

template <typename T>
std::int64_t Conv2d<T>::param_count() const {
  return weight.numel() + (bias.defined() ? bias.numel() : 0);
}

template <typename T>
std::int64_t Conv2d<T>::flops(const Shape& input) const {
  const auto g = kernels::conv_geometry(input, weight.shape(), spec_.stride, padding(), spec_.groups);
  const std::int64_t outputs = g.out_channels * g.out_pixels();
  const std::int64_t macs = outputs * g.patch_size();
  return 2 * macs + (bias.defined() ? outputs : 0);
}

template <typename T>
BasicTensor<T> conv2d_naive(const BasicTensor<T>& x, const Conv2d<T>& conv) {
  return kernels::conv2d_naive(x, conv.weight.value(), conv.bias.defined() ? &conv.bias.value() : nullptr,
                               conv.spec().stride, conv.padding(), conv.spec().groups);
}

template <typename T>
BatchNorm2d<T>::BatchNorm2d(std::int64_t channels, double momentum, double eps)
    : gamma(Var<T>::parameter(BasicTensor<T>::ones({channels}))),
      beta(Var<T>::parameter(BasicTensor<T>::zeros({channels}))),
      running_mean(BasicTensor<T>::zeros({channels})),
      running_var(BasicTensor<T>::ones({channels})),
      momentum_(momentum),
      eps_(eps) {}

template <typename T>
Var<T> BatchNorm2d<T>::forward(const Var<T>& x) {
  return ops::batch_norm(x, gamma, beta, running_mean, running_var, {training_, momentum_, eps_});
}

template <typename T>
void BatchNorm2d<T>::collect(const std::string& prefix, StateList<T>& out) {
  out.params.push_back({prefix + ".gamma", gamma});
  out.params.push_back({prefix + ".beta", beta});
  out.buffers.push_back({prefix + ".running_mean", &running_mean});
  out.buffers.push_back({prefix + ".running_var", &running_var});
}

template <typename T>
ResBlock<T>::ResBlock(std::int64_t in_channels, std::int64_t out_channels, Rng& rng)
    : conv1({in_channels, out_channels, 3, 1, -1, 1, false}, rng),
      bn1(out_channels),
      conv2({out_channels, out_channels, 3, 1, -1, 1, false}, rng),
      bn2(out_channels),
      in_channels_(in_channels),
      out_channels_(out_channels),
      has_projection_(in_channels != out_channels) {
  if (has_projection_) projection = Conv2d<T>({in_channels, out_channels, 1, 1, 0, 1, true}, rng);
}

template <typename T>
Var<T> ResBlock<T>::forward(const Var<T>& x) {
  require(x.value().rank() == 4 && x.dim(1) == in_channels_, ErrorKind::kShapeMismatch,
          "ResBlock expects " + std::to_string(in_channels_) + " channels, got " + shape_str(x.shape()));
  Var<T> h = ops::relu(bn1.forward(conv1.forward(x)));
  h = ops::relu(bn2.forward(conv2.forward(h)));
  return ops::add(h, has_projection_ ? projection.forward(x) : x);
}

template <typename T>
void ResBlock<T>::collect(const std::string& prefix, StateList<T>& out) {
  conv1.collect(prefix + ".conv1", out);
  bn1.collect(prefix + ".bn1", out);
  conv2.collect(prefix + ".conv2", out);
  bn2.collect(prefix + ".bn2", out);
  if (has_projection_) projection.collect(prefix + ".proj", out);
}

template <typename T>
void ResBlock<T>::set_training(bool training) {
  bn1.set_training(training);
  bn2.set_training(training);
}

template <typename T>
std::int64_t ResBlock<T>::param_count() const {
  return conv1.param_count() + bn1.param_count() + conv2.param_count() + bn2.param_count() +
         (has_projection_ ? projection.param_count() : 0);
}

template <typename T>
std::int64_t ResBlock<T>::flops(const Shape& input) const {
  const Shape mid = conv1.output_shape(input);
  std::int64_t f = conv1.flops(input) + batch_norm_flops(mid) + relu_flops(mid);
  f += conv2.flops(mid) + batch_norm_flops(mid) + relu_flops(mid);
  if (has_projection_) f += projection.flops(input);
  f += per_sample_numel(mid);  // residual add
  return f;
}

std::int64_t batch_norm_flops(const Shape& shape) { return 2 * per_sample_numel(shape); }
std::int64_t relu_flops(const Shape& shape) { return per_sample_numel(shape); }
std::int64_t max_pool_flops(const Shape& input) { return 3 * (per_sample_numel(input) / 4); }
std::int64_t upsample_flops(const Shape& input) { return 9 * 4 * per_sample_numel(input); }

template struct StateList<float>;
template struct StateList<double>;
template class Conv2d<float>;
template class Conv2d<double>;
template class BatchNorm2d<float>;
template class BatchNorm2d<double>;
template class ResBlock<float>;
template class ResBlock<double>;
template BasicTensor<float> conv2d_naive(const BasicTensor<float>&, const Conv2d<float>&);
template BasicTensor<double> conv2d_naive(const BasicTensor<double>&, const Conv2d<double>&);

}  // namespace srs::nn
