// Copyright 2026 The SRS Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>

#include "srs/kernels.hpp"
#include "srs/layers.hpp"
#include "srs/ops.hpp"
#include "test_util.hpp"

namespace srs {
namespace {

using testing::kind_of;

TEST(Conv2d, AllOnesKernelCountsOverlaps) {
  Tensor x({1, 1, 4, 4}, 1.0f);
  Tensor w({1, 1, 3, 3}, 1.0f);
  const Tensor y = kernels::conv2d_forward<float>(x, w, nullptr, 1, 1, 1);
  const std::vector<float> expect{4, 6, 6, 4, 6, 9, 9, 6, 6, 9, 9, 6, 4, 6, 6, 4};
  EXPECT_EQ(y.storage(), expect);
}

TEST(Conv2d, ChannelPermutation) {
  Rng rng(1);
  Tensor x = rng_normal<float>(rng, {2, 3, 4, 5}, 1.0f);
  Tensor w({3, 3, 1, 1});
  const int perm[3] = {2, 0, 1};
  for (int o = 0; o < 3; ++o) w[o * 3 + perm[o]] = 1.0f;
  Tensor bias({3});
  const Tensor y = kernels::conv2d_forward<float>(x, w, &bias, 1, 0, 1);
  for (int b = 0; b < 2; ++b) {
    for (int o = 0; o < 3; ++o) {
      for (int p = 0; p < 20; ++p) EXPECT_EQ(y[(b * 3 + o) * 20 + p], x[(b * 3 + perm[o]) * 20 + p]);
    }
  }
}

TEST(Conv2d, PointwiseIsMatrixMultiply) {
  Rng rng(2);
  Tensor x = rng_normal<float>(rng, {1, 4, 3, 3}, 1.0f);
  Tensor w = rng_normal<float>(rng, {5, 4, 1, 1}, 1.0f);
  const Tensor y = kernels::conv2d_forward<float>(x, w, nullptr, 1, 0, 1);
  for (int o = 0; o < 5; ++o) {
    for (int p = 0; p < 9; ++p) {
      double acc = 0.0;
      for (int c = 0; c < 4; ++c) acc += static_cast<double>(w[o * 4 + c]) * x[c * 9 + p];
      EXPECT_NEAR(y[o * 9 + p], acc, 1e-5);
    }
  }
}

TEST(Conv2d, GroupsEqualIndependentHalves) {
  Rng rng(3);
  Tensor x = rng_normal<float>(rng, {2, 4, 6, 6}, 1.0f);
  Tensor w = rng_normal<float>(rng, {6, 2, 3, 3}, 1.0f);
  const Tensor y = kernels::conv2d_forward<float>(x, w, nullptr, 1, 1, 2);
  for (int g = 0; g < 2; ++g) {
    const Tensor xg = slice_channels(x, 2 * g, 2 * g + 2);
    std::vector<float> wd(w.ptr() + g * 3 * 18, w.ptr() + (g + 1) * 3 * 18);
    const Tensor yg = kernels::conv2d_forward<float>(xg, Tensor({3, 2, 3, 3}, wd), nullptr, 1, 1, 1);
    EXPECT_LT(max_abs_diff(slice_channels(y, 3 * g, 3 * g + 3), yg), 1e-6);
  }
}

TEST(Conv2d, ZeroInputGivesBias) {
  Tensor x({1, 2, 3, 3});
  Tensor w({2, 2, 3, 3}, 0.7f);
  Tensor bias({2}, {0.5f, -1.5f});
  const Tensor y = kernels::conv2d_naive<float>(x, w, &bias, 1, 1, 1);
  for (int p = 0; p < 9; ++p) {
    EXPECT_EQ(y[p], 0.5f);
    EXPECT_EQ(y[9 + p], -1.5f);
  }
}

TEST(Conv2d, OptimizedMatchesNaive) {
  Rng rng(4);
  for (int t = 0; t < 40; ++t) {
    const std::int64_t b = 1 + static_cast<std::int64_t>(rng.below(3));
    const std::int64_t groups = 1 + static_cast<std::int64_t>(rng.below(3));
    const std::int64_t k = rng.below(2) == 0 ? 1 : 3;
    const std::int64_t stride = 1 + static_cast<std::int64_t>(rng.below(2));
    const std::int64_t pad = k / 2;
    const std::int64_t h = stride == 1 ? 5 : 7;
    Tensor x = rng_normal<float>(rng, {b, 2 * groups, h, h}, 1.0f);
    Tensor w = rng_normal<float>(rng, {3 * groups, 2, k, k}, 1.0f);
    Tensor bias = rng_normal<float>(rng, {3 * groups}, 1.0f);
    EXPECT_LT(max_abs_diff(kernels::conv2d_forward<float>(x, w, &bias, stride, pad, groups),
                           kernels::conv2d_naive<float>(x, w, &bias, stride, pad, groups)),
              1e-5);
  }
}

TEST(Conv2d, PerGroupCopiesGiveIdenticalOutputs) {
  Rng rng(5);
  const std::int64_t groups = 3;
  Tensor sample = rng_normal<float>(rng, {1, 2, 5, 5}, 1.0f);
  Tensor kernel = rng_normal<float>(rng, {1, 2, 3, 3}, 1.0f);
  std::vector<Tensor> xs(groups, sample), ks(groups, kernel);
  // (1, groups*2, H, W) input with the same kernel in every group.
  const Tensor x = concat_batch(xs).reshape({1, groups * 2, 5, 5});
  const Tensor w = concat_batch(ks);
  const Tensor y = kernels::conv2d_forward<float>(x, w, nullptr, 1, 1, groups);
  for (std::int64_t g = 1; g < groups; ++g) EXPECT_EQ(slice_channels(y, g, g + 1).storage(), slice_channels(y, 0, 1).storage());
}

TEST(Conv2d, ShapeErrors) {
  Rng rng(6);
  EXPECT_EQ(kind_of([&] { nn::Conv2d<float>({3, 4, 3, 1, -1, 2, true}, rng); }), ErrorKind::kGroupDivisibility);
  nn::Conv2d<float> conv({2, 2, 3, 1, -1, 1, true}, rng);
  EXPECT_EQ(kind_of([&] { conv.forward(Var<float>(Tensor({1, 3, 4, 4}))); }), ErrorKind::kShapeMismatch);
  EXPECT_EQ(conv.padding(), 1);
  EXPECT_EQ(nn::same_padding(1), 0);
  EXPECT_EQ(nn::same_padding(5), 2);
}

TEST(Conv2d, FlopsAndParams) {
  Rng rng(7);
  nn::Conv2d<float> conv({64, 8, 1, 1, 0, 1, false}, rng);
  EXPECT_EQ(conv.param_count(), 512);
  // 1x1x(64 -> 8): 512 multiply-accumulates, counted as 2 flops each.
  EXPECT_EQ(conv.flops({1, 64, 1, 1}), 2 * 512);
  nn::Conv2d<float> wide({64, 16, 1, 1, 0, 1, false}, rng);
  EXPECT_EQ(wide.flops({1, 64, 1, 1}), 2 * 1024);
}

TEST(Pooling, MaxAndAverage) {
  Var<float> x(Tensor({1, 1, 2, 2}, {1, 2, 3, 4}));
  EXPECT_EQ(ops::max_pool2x2(x).value().storage(), std::vector<float>{4});
  EXPECT_EQ(ops::adaptive_avg_pool1(Var<float>(Tensor({1, 1, 2, 2}, {1, 3, 5, 7}))).value()[0], 4.0f);
  Var<float> c(Tensor({2, 3, 4, 4}, 2.5f));
  const Tensor pooled = ops::adaptive_avg_pool1(c).value();
  for (float v : pooled.storage()) EXPECT_FLOAT_EQ(v, 2.5f);
  Var<float> one(Tensor({1, 2, 1, 1}, {3, -4}));
  EXPECT_EQ(ops::adaptive_avg_pool1(one).value().storage(), one.value().storage());
  EXPECT_EQ(kind_of([] { ops::max_pool2x2(Var<float>(Tensor({1, 1, 3, 2}))); }), ErrorKind::kOddSpatialDim);
}

TEST(Upsample, ConstantMapsStayConstant) {
  Var<float> c(Tensor({1, 2, 3, 5}, 1.25f));
  const Var<float> up = ops::upsample_bilinear2x(c);
  EXPECT_EQ(up.shape(), (Shape{1, 2, 6, 10}));
  for (float v : up.value().storage()) EXPECT_FLOAT_EQ(v, 1.25f);
  EXPECT_EQ(ops::max_pool2x2(up).value().storage(), c.value().storage());
}

TEST(BatchNorm, InferenceIsPerChannelAffine) {
  Rng rng(8);
  nn::BatchNorm2d<float> bn(3);
  bn.gamma.mutable_value() = Tensor({3}, {1.5f, -0.5f, 2.0f});
  bn.beta.mutable_value() = Tensor({3}, {0.1f, 0.2f, -0.3f});
  bn.running_mean = Tensor({3}, {0.5f, -1.0f, 0.0f});
  bn.running_var = Tensor({3}, {2.0f, 0.5f, 1.0f});
  bn.set_training(false);
  const Tensor x = rng_normal<float>(rng, {2, 3, 2, 2}, 1.0f);
  const Tensor y = bn.forward(Var<float>(x)).value();
  for (int b = 0; b < 2; ++b) {
    for (int c = 0; c < 3; ++c) {
      const double a = bn.gamma.value()[c] / std::sqrt(bn.running_var[c] + 1e-5);
      const double off = bn.beta.value()[c] - a * bn.running_mean[c];
      for (int p = 0; p < 4; ++p) {
        const int i = (b * 3 + c) * 4 + p;
        EXPECT_NEAR(y[i], a * x[i] + off, 1e-5);
      }
    }
  }
}

TEST(BatchNorm, TrainingNormalizesAndUpdatesRunningStats) {
  Rng rng(9);
  nn::BatchNorm2d<double> bn(2);
  const TensorD x = rng_normal<double>(rng, {4, 2, 3, 3}, 2.0);
  const TensorD y = bn.forward(Var<double>(x)).value();
  for (int c = 0; c < 2; ++c) {
    double s = 0, s2 = 0, xs = 0, xs2 = 0;
    for (int b = 0; b < 4; ++b) {
      for (int p = 0; p < 9; ++p) {
        const int i = (b * 2 + c) * 9 + p;
        s += y[i];
        s2 += y[i] * y[i];
        xs += x[i];
        xs2 += x[i] * x[i];
      }
    }
    EXPECT_NEAR(s / 36, 0.0, 1e-12);
    EXPECT_NEAR(s2 / 36, 1.0, 1e-4);
    const double mean = xs / 36, var = xs2 / 36 - mean * mean;
    EXPECT_NEAR(bn.running_mean[c], 0.1 * mean, 1e-12);
    EXPECT_NEAR(bn.running_var[c], 0.9 + 0.1 * var * 36 / 35, 1e-10);
  }
}

TEST(ResBlock, ZeroWeightsReduceToShortcut) {
  Rng rng(10);
  nn::ResBlock<float> block(3, 3, rng);
  EXPECT_FALSE(block.has_projection());
  block.conv1.weight.mutable_value().fill(0.0f);
  block.conv2.weight.mutable_value().fill(0.0f);
  block.set_training(false);
  const Tensor x = rng_normal<float>(rng, {2, 3, 4, 4}, 1.0f);
  EXPECT_EQ(block.forward(Var<float>(x)).value().storage(), x.storage());
}

TEST(ResBlock, ShapesAndProjection) {
  Rng rng(11);
  nn::ResBlock<float> block(2, 5, rng);
  EXPECT_TRUE(block.has_projection());
  const Var<float> y = block.forward(Var<float>(rng_normal<float>(rng, {2, 2, 6, 4}, 1.0f)));
  EXPECT_EQ(y.shape(), (Shape{2, 5, 6, 4}));
  nn::StateList<float> s;
  block.collect("b", s);
  EXPECT_EQ(s.param_count(), block.param_count());
  EXPECT_EQ(block.param_count(), 2 * 5 * 9 + 10 + 5 * 5 * 9 + 10 + 2 * 5 + 5);
  EXPECT_EQ(s.buffers.size(), 4u);
}

TEST(ResBlock, EightChannelGradientCheck) {
  Rng rng(12);
  nn::ResBlock<double> block(8, 8, rng);
  Var<double> x(rng_normal<double>(rng, {2, 8, 3, 3}, 1.0), true);
  const TensorD r = rng_normal<double>(rng, {2, 8, 3, 3}, 1.0);
  nn::StateList<double> s;
  block.collect("b", s);
  std::vector<Var<double>> vars{x};
  for (auto& p : s.params) vars.push_back(p.var);
  EXPECT_LT(grad_check([&] { return ops::weighted_sum(block.forward(x), r); }, vars), 1e-4);
}

}  // namespace
}  // namespace srs
