// Copyright 2026 The SRS Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>

#include "oracles.hpp"
#include "srs/dpconv.hpp"
#include "srs/kernels.hpp"
#include "srs/ops.hpp"
#include "test_util.hpp"

namespace srs {
namespace {

using testing::kind_of;
using dpconv::DPConvConfig;
using dpconv::GeneratorNet;

DPConvConfig small_config(std::int64_t c_in, std::int64_t c_out, std::int64_t k, std::int64_t c_info) {
  DPConvConfig c;
  c.c_in = c_in;
  c.c_out = c_out;
  c.k = k;
  c.c_info = c_info;
  return c;
}

TEST(DPConv, DefaultsGiveEightByOneKernels) {
  Rng rng(1);
  DPConvConfig cfg;
  EXPECT_EQ(cfg.hidden(), 8);
  GeneratorNet<float> gen(cfg, rng);
  const Var<float> fr(rng_normal<float>(rng, {2, 64, 4, 4}, 1.0f));
  EXPECT_EQ(gen.forward(fr).shape(), (Shape{2, 8, 1, 1}));
  EXPECT_EQ(dpconv::generate_kernel(fr, gen).shape(), (Shape{2, 8, 1, 1}));
  const Var<float> fs(rng_normal<float>(rng, {2, 8, 16, 16}, 1.0f));
  EXPECT_EQ(dpconv::dpconv_forward(fs, fr, gen).shape(), (Shape{2, 1, 16, 16}));
}

TEST(DPConv, HiddenDimensionLaw) {
  Rng rng(2);
  for (std::int64_t c_in : {1, 2, 3, 8}) {
    for (std::int64_t c_out : {1, 2, 4}) {
      for (std::int64_t k : {1, 3, 5}) {
        const DPConvConfig cfg = small_config(c_in, c_out, k, 6);
        GeneratorNet<float> gen(cfg, rng);
        const Var<float> fr(rng_normal<float>(rng, {3, 6, 2, 2}, 1.0f));
        EXPECT_EQ(gen.forward(fr).numel() / 3, c_in * c_out * k * k);
        EXPECT_EQ(dpconv::generate_kernel(fr, gen).shape(), (Shape{3 * c_out, c_in, k, k}));
      }
    }
  }
}

TEST(DPConv, ZeroGeneratorGivesZeroKernel) {
  Rng rng(3);
  GeneratorNet<float> gen(small_config(2, 2, 3, 4), rng);
  gen.conv_a.weight.mutable_value().fill(0.0f);
  gen.conv_a.bias.mutable_value().fill(0.0f);
  gen.conv_b.weight.mutable_value().fill(0.0f);
  const Tensor k = dpconv::generate_kernel(Var<float>(rng_normal<float>(rng, {2, 4, 3, 3}, 1.0f)), gen).value();
  for (float v : k.storage()) EXPECT_EQ(v, 0.0f);
}

TEST(DPConv, IdenticalSamplesGiveIdenticalSlices) {
  Rng rng(4);
  GeneratorNet<float> gen(small_config(3, 2, 3, 4), rng);
  const Tensor a = rng_normal<float>(rng, {1, 4, 3, 3}, 1.0f);
  const Tensor b = rng_normal<float>(rng, {1, 4, 3, 3}, 1.0f);
  const Tensor k = dpconv::generate_kernel(Var<float>(concat_batch<float>({a, a, b})), gen).value();
  const std::int64_t block = 2 * 3 * 9;
  double same = 0.0, differ = 0.0;
  for (std::int64_t i = 0; i < block; ++i) {
    same = std::max(same, static_cast<double>(std::abs(k[i] - k[block + i])));
    differ = std::max(differ, static_cast<double>(std::abs(k[i] - k[2 * block + i])));
  }
  EXPECT_LT(same, 1e-6);
  EXPECT_GT(differ, 1e-6);
}

TEST(DPConv, ScalarKernelsScaleEachSample) {
  const Var<float> fs(Tensor({2, 1, 3, 3}, 1.0f));
  const Var<float> kernel(Tensor({2, 1, 1, 1}, {2.0f, 3.0f}));
  const Tensor y = dpconv::dpconv_apply(fs, kernel).value();
  for (int p = 0; p < 9; ++p) {
    EXPECT_EQ(y[p], 2.0f);
    EXPECT_EQ(y[9 + p], 3.0f);
  }
}

TEST(DPConv, ApplyRejectsMismatchedKernels) {
  const Var<float> fs(Tensor({2, 3, 4, 4}));
  EXPECT_EQ(kind_of([&] { dpconv::dpconv_apply(fs, Var<float>(Tensor({3, 3, 1, 1}))); }),
            ErrorKind::kBatchKernelMismatch);
  EXPECT_THROW(dpconv::dpconv_apply(fs, Var<float>(Tensor({2, 3, 2, 2}))), Error);
}

TEST(DPConv, BatchedEqualsPerSample) {
  Rng rng(5);
  for (int t = 0; t < 10; ++t) {
    const std::int64_t b = 1 + static_cast<std::int64_t>(rng.below(4));
    const auto c_in = static_cast<std::int64_t>(1 + rng.below(3));
    const auto c_out = static_cast<std::int64_t>(1 + rng.below(3));
    const std::int64_t k = rng.below(2) == 0 ? 1 : 3;
    GeneratorNet<double> gen(small_config(c_in, c_out, k, 4), rng);
    const Var<double> fs(rng_normal<double>(rng, {b, c_in, 5, 6}, 1.0));
    const Var<double> fr(rng_normal<double>(rng, {b, 4, 2, 2}, 1.0));
    const Var<double> kernel = dpconv::generate_kernel(fr, gen);
    const TensorD batched = dpconv::dpconv_apply(fs, kernel).value();
    EXPECT_LT(max_abs_diff(batched, oracle::dpconv_per_sample(fs.value(), kernel.value())), 1e-10);
    for (std::int64_t n = 0; n < b; ++n) {
      const TensorD alone = dpconv::dpconv_forward(Var<double>(batch_item(fs.value(), n)),
                                                   Var<double>(batch_item(fr.value(), n)), gen)
                                .value();
      EXPECT_LT(max_abs_diff(batch_item(batched, n), alone), 1e-10);
    }
  }
}

TEST(DPConv, LinearInFeaturesForFixedKernel) {
  Rng rng(6);
  GeneratorNet<double> gen(small_config(2, 3, 3, 4), rng);
  const Var<double> fr(rng_normal<double>(rng, {2, 4, 3, 3}, 1.0));
  const TensorD x = rng_normal<double>(rng, {2, 2, 4, 4}, 1.0);
  const TensorD y = rng_normal<double>(rng, {2, 2, 4, 4}, 1.0);
  auto f = [&](const TensorD& in) { return dpconv::dpconv_forward(Var<double>(in), fr, gen).value(); };
  const TensorD lhs = f(elementwise_binary(x, y, BinaryOp::kAdd));
  const TensorD rhs = elementwise_binary(f(x), f(y), BinaryOp::kAdd);
  EXPECT_LT(max_abs_diff(lhs, rhs), 1e-6);
}

TEST(DPConv, BatchPermutationEquivariance) {
  Rng rng(7);
  GeneratorNet<double> gen(small_config(2, 2, 3, 4), rng);
  const TensorD fs = rng_normal<double>(rng, {3, 2, 4, 4}, 1.0);
  const TensorD fr = rng_normal<double>(rng, {3, 4, 2, 2}, 1.0);
  const int perm[3] = {2, 0, 1};
  std::vector<TensorD> ps, pr;
  for (int i : perm) {
    ps.push_back(batch_item(fs, i));
    pr.push_back(batch_item(fr, i));
  }
  const TensorD y = dpconv::dpconv_forward(Var<double>(fs), Var<double>(fr), gen).value();
  const TensorD yp = dpconv::dpconv_forward(Var<double>(concat_batch(ps)), Var<double>(concat_batch(pr)), gen).value();
  for (int i = 0; i < 3; ++i) EXPECT_LT(max_abs_diff(batch_item(yp, i), batch_item(y, perm[i])), 1e-12);
}

TEST(DPConv, DeterministicAcrossRuns) {
  auto run = [] {
    Rng rng(8);
    GeneratorNet<float> gen(small_config(4, 2, 3, 8), rng);
    return dpconv::generate_kernel(Var<float>(rng_normal<float>(rng, {2, 8, 4, 4}, 1.0f)), gen).value();
  };
  EXPECT_EQ(run().storage(), run().storage());
}

TEST(DPConv, GradientReachesBothBranches) {
  Rng rng(9);
  GeneratorNet<double> gen(small_config(3, 2, 3, 4), rng);
  Var<double> fs(rng_normal<double>(rng, {2, 3, 4, 4}, 1.0), true);
  Var<double> fr(rng_normal<double>(rng, {2, 4, 2, 2}, 1.0), true);
  backward(ops::weighted_sum(dpconv::dpconv_forward(fs, fr, gen), rng_normal<double>(rng, {2, 2, 4, 4}, 1.0)));
  auto norm = [](const TensorD& g) {
    double s = 0.0;
    for (double v : g.storage()) s += v * v;
    return std::sqrt(s);
  };
  EXPECT_GT(norm(fs.grad()), 1e-12);
  EXPECT_GT(norm(fr.grad()), 1e-12);
  const double err = grad_check([&] { return ops::sum(dpconv::dpconv_forward(fs, fr, gen)); },
                                {fs, fr, gen.conv_a.weight, gen.conv_a.bias, gen.conv_b.weight});
  EXPECT_LT(err, 1e-4);
}

TEST(DPConv, ParameterCounts) {
  Rng rng(10);
  DPConvConfig cfg;
  cfg.conv_b_groups = 1;
  cfg.conv_b_bias = true;
  GeneratorNet<float> gen(cfg, rng);
  // conv_a 64x64 weights + 64 bias, conv_b 64x8 weights + 8 bias.
  EXPECT_EQ(dpconv::count_params(gen), 64 * 64 + 64 + 64 * 8 + 8);
  nn::StateList<float> s;
  gen.collect("g", s);
  std::int64_t enumerated = 0;
  for (const auto& p : s.params) enumerated += p.var.numel();
  EXPECT_EQ(enumerated, dpconv::count_params(gen));
  DPConvConfig wide = cfg;
  wide.c_info = 128;
  GeneratorNet<float> gw(wide, rng);
  EXPECT_EQ(gw.conv_a.weight.numel(), 16384);
  // The default grouped conv_b: gcd(64, 8) = 8 groups.
  DPConvConfig grouped;
  EXPECT_EQ(grouped.resolved_conv_b_groups(), 8);
  GeneratorNet<float> gg(grouped, rng);
  EXPECT_EQ(dpconv::count_params(gg), 64 * 64 + 64 + 8 * 8);
}

TEST(DPConv, InvalidConfigsRejected) {
  Rng rng(11);
  EXPECT_EQ(kind_of([&] { GeneratorNet<float>(small_config(0, 1, 1, 4), rng); }), ErrorKind::kInvalidArgument);
  EXPECT_EQ(kind_of([&] { GeneratorNet<float>(small_config(1, 1, 2, 4), rng); }), ErrorKind::kInvalidArgument);
  DPConvConfig bad = small_config(2, 2, 1, 6);
  bad.conv_b_groups = 4;
  EXPECT_EQ(kind_of([&] { GeneratorNet<float>(bad, rng); }), ErrorKind::kGroupDivisibility);
}

TEST(CombinationDynConv, SingleKernelIsStandardConv) {
  Rng rng(12);
  dpconv::CombinationDynConv<float> layer(1, 3, 2, 3, rng);
  const Tensor x = rng_normal<float>(rng, {2, 3, 5, 5}, 1.0f);
  const Tensor coeff = layer.coefficients(Var<float>(x)).value();
  for (float c : coeff.storage()) EXPECT_EQ(c, 1.0f);
  const Tensor y = layer.forward(Var<float>(x)).value();
  const Tensor ref = kernels::conv2d_naive<float>(x, layer.base_kernel(0), nullptr, 1, 1, 1);
  EXPECT_LT(max_abs_diff(y, ref), 1e-6);
}

TEST(CombinationDynConv, IdenticalBankMatchesConvForAnyInput) {
  Rng rng(13);
  dpconv::CombinationDynConv<float> layer(4, 2, 3, 3, rng);
  const Tensor w = layer.base_kernel(0);
  Tensor& bank = layer.bank.mutable_value();
  for (std::int64_t i = 0; i < 4; ++i) std::copy(w.storage().begin(), w.storage().end(), bank.ptr() + i * w.numel());
  for (int t = 0; t < 5; ++t) {
    const Tensor x = rng_normal<float>(rng, {3, 2, 4, 6}, 2.0f);
    EXPECT_LT(max_abs_diff(layer.forward(Var<float>(x)).value(), kernels::conv2d_naive<float>(x, w, nullptr, 1, 1, 1)),
              1e-5);
  }
}

TEST(CombinationDynConv, CoefficientsSumToOneAndMixingCommutes) {
  Rng rng(14);
  dpconv::CombinationDynConv<double> layer(3, 2, 2, 3, rng);
  const TensorD x = rng_normal<double>(rng, {2, 2, 5, 5}, 1.0);
  const TensorD alpha = layer.coefficients(Var<double>(x)).value();
  ASSERT_EQ(alpha.shape(), (Shape{2, 3}));
  for (int b = 0; b < 2; ++b) EXPECT_NEAR(alpha[b * 3] + alpha[b * 3 + 1] + alpha[b * 3 + 2], 1.0, 1e-12);
  const TensorD y = layer.forward(Var<double>(x)).value();
  // Convolve with each base kernel, then mix with the coefficients.
  for (int b = 0; b < 2; ++b) {
    const TensorD xb = batch_item(x, b);
    TensorD mixed({1, 2, 5, 5});
    for (int i = 0; i < 3; ++i) {
      const TensorD yi = kernels::conv2d_naive<double>(xb, layer.base_kernel(i), nullptr, 1, 1, 1);
      for (std::int64_t j = 0; j < mixed.numel(); ++j) mixed[j] += alpha[b * 3 + i] * yi[j];
    }
    EXPECT_LT(max_abs_diff(batch_item(y, b), mixed), 1e-5);
  }
}

}  // namespace
}  // namespace srs
