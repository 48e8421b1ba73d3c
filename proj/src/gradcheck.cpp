// Copyright 2026 The SRS Authors
// SPDX-License-Identifier: Apache-2.0

#include "srs/gradcheck.hpp"

#include <algorithm>
#include <functional>

#include "srs/dpconv.hpp"
#include "srs/layers.hpp"
#include "srs/train.hpp"

namespace srs {

namespace {

using V = Var<double>;

std::int64_t pick(Rng& rng, std::int64_t lo, std::int64_t hi) {
  return lo + static_cast<std::int64_t>(rng.below(static_cast<std::uint64_t>(hi - lo + 1)));
}

TensorD normal(Rng& rng, const Shape& s) { return rng_normal<double>(rng, s, 1.0); }

V input(Rng& rng, const Shape& s) { return V(normal(rng, s), true); }

std::vector<V> params_of(nn::StateList<double>& s) {
  std::vector<V> out;
  for (auto& p : s.params) out.push_back(p.var);
  return out;
}

double check_conv(Rng& rng) {
  const std::int64_t groups = pick(rng, 1, 3);
  const std::int64_t cin = groups * pick(rng, 1, 2), cout = groups * pick(rng, 1, 2);
  const std::int64_t k = rng.below(2) == 0 ? 1 : 3;
  const std::int64_t stride = pick(rng, 1, 2);
  const std::int64_t pad = k / 2;
  // Odd sizes keep the strided output extent integral.
  const std::int64_t h = stride == 1 ? pick(rng, 2, 5) : 2 * pick(rng, 1, 2) + 1;
  nn::Conv2d<double> conv({cin, cout, k, stride, pad, groups, rng.below(2) == 0}, rng);
  V x = input(rng, {pick(rng, 1, 2), cin, h, h});
  const TensorD r = normal(rng, conv.output_shape(x.shape()));
  std::vector<V> vars{x, conv.weight};
  if (conv.bias.defined()) vars.push_back(conv.bias);
  return grad_check([&] { return ops::weighted_sum(conv.forward(x), r); }, vars);
}

double check_pool(Rng& rng) {
  V x = input(rng, {pick(rng, 1, 2), pick(rng, 1, 3), 2 * pick(rng, 1, 3), 2 * pick(rng, 1, 3)});
  const TensorD r = normal(rng, {x.dim(0), x.dim(1), x.dim(2) / 2, x.dim(3) / 2});
  return grad_check([&] { return ops::weighted_sum(ops::max_pool2x2(x), r); }, {x});
}

double check_upsample(Rng& rng) {
  V x = input(rng, {pick(rng, 1, 2), pick(rng, 1, 3), pick(rng, 1, 4), pick(rng, 1, 4)});
  const TensorD r = normal(rng, {x.dim(0), x.dim(1), 2 * x.dim(2), 2 * x.dim(3)});
  return grad_check([&] { return ops::weighted_sum(ops::upsample_bilinear2x(x), r); }, {x});
}

double check_norm(Rng& rng) {
  const std::int64_t c = pick(rng, 1, 3);
  nn::BatchNorm2d<double> bn(c);
  bn.gamma.mutable_value() = rng_uniform<double>(rng, {c}, 0.5, 1.5);
  bn.beta.mutable_value() = normal(rng, {c});
  const bool training = rng.below(2) == 0;
  bn.set_training(training);
  if (!training) {
    bn.running_mean = normal(rng, {c});
    bn.running_var = rng_uniform<double>(rng, {c}, 0.5, 2.0);
  }
  V x = input(rng, {pick(rng, 2, 3), c, pick(rng, 2, 4), pick(rng, 2, 4)});
  const TensorD r = normal(rng, x.shape());
  return grad_check([&] { return ops::weighted_sum(bn.forward(x), r); }, {x, bn.gamma, bn.beta});
}

double check_resblock(Rng& rng) {
  const std::int64_t cin = pick(rng, 1, 3), cout = pick(rng, 1, 3);
  nn::ResBlock<double> block(cin, cout, rng);
  V x = input(rng, {2, cin, pick(rng, 3, 4), pick(rng, 3, 4)});
  const TensorD r = normal(rng, {2, cout, x.dim(2), x.dim(3)});
  nn::StateList<double> s;
  block.collect("b", s);
  auto vars = params_of(s);
  vars.push_back(x);
  return grad_check([&] { return ops::weighted_sum(block.forward(x), r); }, vars);
}

double check_generator(Rng& rng) {
  dpconv::DPConvConfig cfg;
  cfg.c_in = pick(rng, 1, 3);
  cfg.c_out = pick(rng, 1, 2);
  cfg.k = rng.below(2) == 0 ? 1 : 3;
  cfg.c_info = pick(rng, 2, 4);
  cfg.conv_b_bias = rng.below(2) == 0;
  dpconv::GeneratorNet<double> gen(cfg, rng);
  V f = input(rng, {pick(rng, 1, 3), cfg.c_info, pick(rng, 1, 3), pick(rng, 1, 3)});
  const TensorD r = normal(rng, {f.dim(0), cfg.hidden(), 1, 1});
  nn::StateList<double> s;
  gen.collect("g", s);
  auto vars = params_of(s);
  vars.push_back(f);
  return grad_check([&] { return ops::weighted_sum(gen.forward(f), r); }, vars);
}

double check_dpconv(Rng& rng) {
  dpconv::DPConvConfig cfg;
  cfg.c_in = pick(rng, 1, 3);
  cfg.c_out = pick(rng, 1, 2);
  cfg.k = rng.below(2) == 0 ? 1 : 3;
  cfg.c_info = pick(rng, 2, 4);
  dpconv::GeneratorNet<double> gen(cfg, rng);
  const std::int64_t b = pick(rng, 1, 3);
  V fs = input(rng, {b, cfg.c_in, pick(rng, 2, 4), pick(rng, 2, 4)});
  V fr = input(rng, {b, cfg.c_info, pick(rng, 1, 3), pick(rng, 1, 3)});
  const TensorD r = normal(rng, {b, cfg.c_out, fs.dim(2), fs.dim(3)});
  nn::StateList<double> s;
  gen.collect("g", s);
  auto vars = params_of(s);
  vars.push_back(fs);
  vars.push_back(fr);
  return grad_check([&] { return ops::weighted_sum(dpconv::dpconv_forward(fs, fr, gen), r); }, vars);
}

double check_combination(Rng& rng) {
  const std::int64_t n = pick(rng, 1, 3), cin = pick(rng, 1, 3), cout = pick(rng, 1, 2);
  const std::int64_t k = rng.below(2) == 0 ? 1 : 3;
  dpconv::CombinationDynConv<double> layer(n, cin, cout, k, rng);
  V x = input(rng, {pick(rng, 1, 2), cin, pick(rng, 2, 4), pick(rng, 2, 4)});
  const TensorD r = normal(rng, {x.dim(0), cout, x.dim(2), x.dim(3)});
  return grad_check([&] { return ops::weighted_sum(layer.forward(x), r); },
                    {x, layer.bank, layer.attention_weight, layer.attention_bias});
}

double check_loss_recon(Rng& rng) {
  const Shape s{pick(rng, 1, 3), pick(rng, 1, 3), pick(rng, 2, 4), pick(rng, 2, 4)};
  V x = input(rng, s);
  const TensorD target = normal(rng, s);
  if (rng.below(2) == 0) return grad_check([&] { return train::loss_recon(x, target); }, {x});
  TensorD mask({s[0], 1, s[2], s[3]});
  for (auto& m : mask.data()) m = rng.below(2) == 0 ? 1.0 : 0.0;
  return grad_check([&] { return train::loss_recon_masked(x, target, mask); }, {x});
}

double check_loss_seg(Rng& rng) {
  const Shape s{pick(rng, 1, 3), 1, pick(rng, 2, 4), pick(rng, 2, 4)};
  V x = input(rng, s);
  TensorD target(s);
  for (auto& t : target.data()) t = rng.below(2) == 0 ? 1.0 : 0.0;
  return grad_check([&] { return train::loss_seg(x, target); }, {x});
}

const std::vector<std::pair<std::string, std::function<double(Rng&)>>>& registry() {
  static const std::vector<std::pair<std::string, std::function<double(Rng&)>>> r{
      {"conv2d", check_conv},
      {"max_pool", check_pool},
      {"upsample", check_upsample},
      {"batch_norm", check_norm},
      {"resblock", check_resblock},
      {"generator", check_generator},
      {"dpconv_forward", check_dpconv},
      {"combination_dynconv", check_combination},
      {"loss_recon", check_loss_recon},
      {"loss_seg", check_loss_seg},
  };
  return r;
}

}  // namespace

std::vector<std::string> gradcheck_layers() {
  std::vector<std::string> out;
  for (const auto& [name, fn] : registry()) out.push_back(name);
  return out;
}

std::vector<LayerGradCheck> run_gradcheck_suite(int configs_per_layer, std::uint64_t seed,
                                                const std::vector<std::string>& layers) {
  require(configs_per_layer > 0, ErrorKind::kInvalidArgument, "configs per layer must be positive");
  for (const auto& l : layers) {
    const auto names = gradcheck_layers();
    require(std::find(names.begin(), names.end(), l) != names.end(), ErrorKind::kInvalidArgument,
            "unknown gradcheck layer '" + l + "'");
  }
  std::vector<LayerGradCheck> out;
  std::uint64_t stream = 0;
  for (const auto& [name, fn] : registry()) {
    ++stream;
    if (!layers.empty() && std::find(layers.begin(), layers.end(), name) == layers.end()) continue;
    Rng rng(seed, stream);
    LayerGradCheck r{name, configs_per_layer, 0.0};
    for (int i = 0; i < configs_per_layer; ++i) r.max_rel_error = std::max(r.max_rel_error, fn(rng));
    out.push_back(r);
  }
  return out;
}

}  // namespace srs
