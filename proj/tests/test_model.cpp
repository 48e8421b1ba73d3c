// Copyright 2026 The SRS Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>

#include "srs/model.hpp"
#include "srs/ops.hpp"
#include "srs/train.hpp"
#include "test_util.hpp"

namespace srs::model {
namespace {

using srs::testing::kind_of;

ModelConfig small(Variant v) {
  ModelConfig c;
  c.widths = {4, 8, 8, 12};
  c.dpconv.c_in = 4;
  c.dpconv.c_info = 8;
  c.variant = v;
  return c;
}

Tensor images(std::uint64_t seed, std::int64_t b = 2, std::int64_t side = 16) {
  Rng rng(seed);
  return rng_uniform<float>(rng, {b, 1, side, side}, 0.0f, 1.0f);
}

double grad_norm(const FVar& v) {
  if (!v.has_grad()) return 0.0;
  const Tensor g = v.grad();
  double s = 0.0;
  for (float x : g.storage()) s += static_cast<double>(x) * x;
  return std::sqrt(s);
}

TEST(Model, VariantNames) {
  for (Variant v : {Variant::kPureSeg, Variant::kDPConvSeg, Variant::kDPConvRecon}) {
    EXPECT_EQ(parse_variant(to_string(v)), v);
  }
  EXPECT_EQ(kind_of([] { parse_variant("dpconv"); }), ErrorKind::kUnknownVariant);
  EXPECT_EQ(kind_of([] { build_ablation("nope", ModelConfig{}, 1); }), ErrorKind::kUnknownVariant);
}

TEST(Model, ConfigJsonRoundTrip) {
  ModelConfig c = small(Variant::kDPConvSeg);
  c.dpconv.k = 3;
  EXPECT_EQ(ModelConfig::from_json(c.to_json()), c);
  ModelConfig bad = small(Variant::kPureSeg);
  bad.widths = {4, 8};
  EXPECT_THROW(bad.validate(), Error);
}

TEST(Model, ShapesForAllVariants) {
  const Tensor x = images(1);
  for (Variant v : {Variant::kPureSeg, Variant::kDPConvSeg, Variant::kDPConvRecon}) {
    SRSModel m(small(v), 7);
    const auto out = m.seg_forward(FVar(x));
    EXPECT_EQ(out.logits.shape(), (Shape{2, 1, 16, 16}));
    EXPECT_EQ(out.f_s.shape(), (Shape{2, 12, 2, 2}));
    EXPECT_EQ(out.bottleneck.shape(), out.f_s.shape());
    EXPECT_EQ(out.dpconv.defined(), v != Variant::kPureSeg);
    EXPECT_EQ(m.has_reconstruction(), v == Variant::kDPConvRecon);
    EXPECT_EQ(m.has_bridge(), v != Variant::kPureSeg);
  }
  SRSModel m(small(Variant::kDPConvRecon), 7);
  const auto r = m.recon_forward(FVar(x));
  EXPECT_EQ(r.recon.shape(), x.shape());
  EXPECT_EQ(r.f_r.shape(), (Shape{2, 12, 2, 2}));
}

TEST(Model, InputValidation) {
  SRSModel m(small(Variant::kDPConvRecon), 7);
  EXPECT_EQ(kind_of([&] { m.seg_forward(FVar(Tensor({1, 1, 20, 16}))); }), ErrorKind::kSpatialDivisibility);
  EXPECT_EQ(kind_of([&] { m.seg_forward(FVar(Tensor({1, 3, 16, 16}))); }), ErrorKind::kShapeMismatch);
  SRSModel pure(small(Variant::kPureSeg), 7);
  EXPECT_EQ(kind_of([&] { pure.recon_forward(FVar(Tensor({1, 1, 16, 16}))); }), ErrorKind::kInvalidArgument);
}

TEST(Model, ZeroInitBridgeMatchesPureSegmentation) {
  const Tensor x = images(2);
  SRSModel pure(small(Variant::kPureSeg), 11);
  const Tensor ref = pure.seg_forward(FVar(x)).logits.value();
  for (Variant v : {Variant::kDPConvSeg, Variant::kDPConvRecon}) {
    SRSModel m(small(v), 11);
    EXPECT_EQ(m.seg_forward(FVar(x)).logits.value().storage(), ref.storage());
  }
}

TEST(Model, ReconstructionBridgeReadsReconstructionEncoder) {
  const Tensor x = images(3);
  SRSModel recon(small(Variant::kDPConvRecon), 5);
  recon.bridge().proj_out.weight.mutable_value().fill(0.1f);
  recon.set_training(false);
  const Tensor before = recon.seg_forward(FVar(x)).dpconv.value();
  for (auto& p : recon.phase_one_parameters()) {
    if (p.name.rfind("recon_encoder.block3.conv2", 0) == 0) p.var.mutable_value().fill(0.05f);
  }
  EXPECT_GT(max_abs_diff(recon.seg_forward(FVar(x)).dpconv.value(), before), 0.0f);
}

TEST(Model, ParameterAccounting) {
  SRSModel pure(small(Variant::kPureSeg), 1);
  SRSModel seg(small(Variant::kDPConvSeg), 1);
  SRSModel full(small(Variant::kDPConvRecon), 1);
  EXPECT_LT(count_model_params(pure), count_model_params(seg));
  EXPECT_LT(count_model_params(seg), count_model_params(full));
  EXPECT_EQ(pure.bridge_param_count(), 0);
  EXPECT_EQ(count_model_params(seg) - count_model_params(pure), seg.bridge_param_count());
  std::int64_t enumerated = 0;
  for (const auto& p : full.state().params) enumerated += p.var.numel();
  EXPECT_EQ(enumerated, count_model_params(full));
  const Shape in{1, 1, 16, 16};
  EXPECT_GT(count_flops(pure, in), 0);
  EXPECT_EQ(count_flops(full, in), full.reconstruction_flops(in) + full.bridge_flops(in) +
                                       count_flops(pure, in));
}

TEST(Model, FreezeMaskAndPhaseParameters) {
  SRSModel m(small(Variant::kDPConvRecon), 3);
  EXPECT_TRUE(m.freeze_mask().empty());
  for (const auto& p : m.phase_one_parameters()) EXPECT_EQ(p.name.rfind("recon_", 0), 0u) << p.name;
  m.freeze_reconstruction_encoder();
  EXPECT_TRUE(m.reconstruction_frozen());
  EXPECT_FALSE(m.freeze_mask().empty());
  for (const auto& name : m.freeze_mask()) EXPECT_EQ(name.rfind("recon_encoder.", 0), 0u) << name;
  for (const auto& p : m.phase_two_parameters()) {
    EXPECT_EQ(m.freeze_mask().count(p.name), 0u);
    EXPECT_NE(p.name.rfind("recon_decoder.", 0), 0u);
  }
  std::size_t encoder_params = 0;
  for (const auto& p : m.state().params) encoder_params += p.name.rfind("recon_encoder.", 0) == 0 ? 1 : 0;
  EXPECT_EQ(m.freeze_mask().size(), encoder_params);
}

TEST(Model, UnfrozenLeavesMaskEmpty) {
  SRSModel m(small(Variant::kDPConvRecon), 3);
  bool has_encoder = false;
  for (const auto& p : m.phase_two_parameters()) has_encoder = has_encoder || p.name.rfind("recon_encoder.", 0) == 0;
  EXPECT_TRUE(has_encoder);
  EXPECT_TRUE(m.freeze_mask().empty());
}

TEST(Model, DroppingDecoderKeepsSegmentationOutput) {
  const Tensor x = images(4);
  SRSModel m(small(Variant::kDPConvRecon), 9);
  m.bridge().proj_out.weight.mutable_value().fill(0.2f);
  m.set_training(false);
  const Tensor before = m.seg_forward(FVar(x)).logits.value();
  m.drop_reconstruction_decoder();
  EXPECT_FALSE(m.has_reconstruction_decoder());
  EXPECT_EQ(m.seg_forward(FVar(x)).logits.value().storage(), before.storage());
  EXPECT_EQ(kind_of([&] { m.recon_forward(FVar(x)); }), ErrorKind::kInvalidArgument);
}

TEST(Model, PhaseTwoGradientsReachEveryTrainableBranch) {
  const Tensor x = images(5, 4);
  Tensor target({4, 1, 16, 16});
  for (std::int64_t i = 0; i < target.numel(); i += 7) target[i] = 1.0f;
  SRSModel m(small(Variant::kDPConvRecon), 13);
  m.drop_reconstruction_decoder();
  m.freeze_reconstruction_encoder();
  train::SgdOptimizer opt(0.9, 1e-4);
  auto step = [&] {
    for (auto& p : m.state().params) p.var.zero_grad();
    backward(train::loss_seg(m.seg_forward(FVar(x)).logits, target));
  };
  // proj_out starts at zero, so the generator sees gradient from step two.
  step();
  opt.step(m.phase_two_parameters(), 0.05);
  step();
  auto norm_of = [&](const std::string& prefix) {
    double s = 0.0;
    for (const auto& p : m.state().params) {
      if (p.name.rfind(prefix, 0) == 0) s += grad_norm(p.var);
    }
    return s;
  };
  for (const char* prefix : {"seg_encoder.", "seg_decoder.", "bridge.generator.", "bridge.proj_info.",
                             "bridge.proj_in.", "bridge.proj_out."}) {
    EXPECT_GT(norm_of(prefix), 1e-12) << prefix;
  }
  EXPECT_EQ(norm_of("recon_encoder."), 0.0);
}

TEST(Model, UntrainedReconstructionLossIsFinitePositive) {
  SRSModel m(small(Variant::kDPConvRecon), 2);
  const Tensor x = images(6);
  const double loss = train::loss_recon(m.recon_forward(FVar(x)).recon, x).value()[0];
  EXPECT_TRUE(std::isfinite(loss));
  EXPECT_GT(loss, 0.0);
}

TEST(Model, SeedDeterminesWeights) {
  SRSModel a(small(Variant::kDPConvRecon), 21), b(small(Variant::kDPConvRecon), 21), c(small(Variant::kDPConvRecon), 22);
  const auto sa = a.state(), sb = b.state(), sc = c.state();
  ASSERT_EQ(sa.params.size(), sb.params.size());
  bool any_diff = false;
  for (std::size_t i = 0; i < sa.params.size(); ++i) {
    EXPECT_EQ(sa.params[i].name, sb.params[i].name);
    EXPECT_EQ(sa.params[i].var.value().storage(), sb.params[i].var.value().storage());
    any_diff = any_diff || sa.params[i].var.value().storage() != sc.params[i].var.value().storage();
  }
  EXPECT_TRUE(any_diff);
}

}  // namespace
}  // namespace srs::model
