// Copyright 2026 The SRS Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "srs/rng.hpp"
#include "srs/tensor.hpp"
#include "test_util.hpp"

namespace srs {
namespace {

using testing::kind_of;

TEST(Tensor, ConstructionAndShape) {
  Tensor t({2, 3, 4});
  EXPECT_EQ(t.numel(), 24);
  EXPECT_EQ(t.rank(), 3u);
  EXPECT_EQ(t.dim(1), 3);
  EXPECT_EQ(kind_of([&] { (void)t.dim(3); }), ErrorKind::kInvalidAxis);
  EXPECT_EQ(kind_of([] { Tensor({2, 0}); }), ErrorKind::kInvalidArgument);
  EXPECT_EQ(kind_of([] { Tensor({2, 2}, std::vector<float>(3)); }), ErrorKind::kShapeMismatch);
}

TEST(Tensor, ReshapePreservesDataAndRejectsBadCounts) {
  Tensor t({2, 3}, {1, 2, 3, 4, 5, 6});
  Tensor r = t.reshape({3, 2});
  EXPECT_EQ(r.storage(), t.storage());
  EXPECT_EQ(kind_of([&] { (void)t.reshape({4, 2}); }), ErrorKind::kShapeMismatch);
}

TEST(Tensor, ElementwiseOps) {
  Tensor a({2, 2}, {1, 2, 3, 4});
  Tensor b({2, 2}, {4, 3, 2, 1});
  EXPECT_EQ(elementwise_binary(a, b, BinaryOp::kAdd).storage(), (std::vector<float>{5, 5, 5, 5}));
  EXPECT_EQ(elementwise_binary(a, b, BinaryOp::kSub).storage(), (std::vector<float>{-3, -1, 1, 3}));
  EXPECT_EQ(elementwise_binary(a, b, BinaryOp::kMul).storage(), (std::vector<float>{4, 6, 6, 4}));
  EXPECT_EQ(kind_of([&] { elementwise_binary(a, Tensor({4}), BinaryOp::kAdd); }), ErrorKind::kShapeMismatch);
}

TEST(Tensor, ReductionsMatchLoops) {
  Rng rng(11);
  TensorD t = rng_normal<double>(rng, {3, 4, 5}, 1.0);
  TensorD s = reduce_sum(t, {1});
  ASSERT_EQ(s.shape(), (Shape{3, 1, 5}));
  for (int i = 0; i < 3; ++i) {
    for (int k = 0; k < 5; ++k) {
      double acc = 0.0;
      for (int j = 0; j < 4; ++j) acc += t[(i * 4 + j) * 5 + k];
      EXPECT_NEAR(s[i * 5 + k], acc, 1e-12);
    }
  }
  TensorD m = reduce_mean(t, {0, 2});
  ASSERT_EQ(m.shape(), (Shape{1, 4, 1}));
  for (int j = 0; j < 4; ++j) {
    double acc = 0.0;
    for (int i = 0; i < 3; ++i) {
      for (int k = 0; k < 5; ++k) acc += t[(i * 4 + j) * 5 + k];
    }
    EXPECT_NEAR(m[j], acc / 15.0, 1e-12);
  }
  EXPECT_EQ(kind_of([&] { reduce_sum(t, {3}); }), ErrorKind::kInvalidAxis);
  EXPECT_EQ(reduce_mean(t, {}).storage(), t.storage());
}

TEST(Tensor, BatchHelpers) {
  Tensor a({1, 2, 1, 1}, {1, 2});
  Tensor b({1, 2, 1, 1}, {3, 4});
  Tensor c = concat_batch<float>({a, b});
  EXPECT_EQ(c.shape(), (Shape{2, 2, 1, 1}));
  EXPECT_EQ(batch_item(c, 1).storage(), b.storage());
  EXPECT_EQ(slice_channels(c, 1, 2).storage(), (std::vector<float>{2, 4}));
}

TEST(Rng, DeterministicAndStreamIndependent) {
  Rng a(42), b(42), c(42, 1);
  for (int i = 0; i < 10; ++i) {
    const auto x = a.next_u64();
    EXPECT_EQ(x, b.next_u64());
    EXPECT_NE(x, c.next_u64());
  }
  Rng d(Rng::State{42, 0, 0});
  Rng e(42);
  for (int i = 0; i < 3; ++i) (void)e.next_u64();
  Rng f(e.state());
  EXPECT_EQ(f.next_u64(), e.next_u64());
  EXPECT_EQ(d.next_u64(), Rng(42).next_u64());
}

TEST(Rng, UniformAndNormalMoments) {
  Rng rng(5);
  const int n = 200000;
  double s = 0, s2 = 0, u = 0;
  for (int i = 0; i < n; ++i) {
    const double z = rng.normal();
    s += z;
    s2 += z * z;
    const double v = rng.uniform();
    ASSERT_GE(v, 0.0);
    ASSERT_LT(v, 1.0);
    u += v;
  }
  EXPECT_NEAR(s / n, 0.0, 0.01);
  EXPECT_NEAR(s2 / n, 1.0, 0.02);
  EXPECT_NEAR(u / n, 0.5, 0.005);
}

TEST(Rng, BelowIsInRangeAndCoversAll) {
  Rng rng(9);
  std::set<std::uint64_t> seen;
  for (int i = 0; i < 1000; ++i) {
    const auto v = rng.below(7);
    ASSERT_LT(v, 7u);
    seen.insert(v);
  }
  EXPECT_EQ(seen.size(), 7u);
}

TEST(Rng, NormalTensorRejectsNonPositiveStd) {
  Rng rng(1);
  EXPECT_EQ(kind_of([&] { rng_normal<float>(rng, {2}, 0.0f); }), ErrorKind::kInvalidArgument);
}

}  // namespace
}  // namespace srs
