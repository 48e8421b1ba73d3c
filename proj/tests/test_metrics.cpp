// Copyright 2026 The SRS Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>
#include <json.hpp>
#include <sstream>

#include "oracles.hpp"
#include "srs/data.hpp"
#include "srs/metrics.hpp"
#include "srs/model.hpp"
#include "test_util.hpp"

namespace srs::metrics {
namespace {

Tensor mask_of(std::int64_t h, std::int64_t w, std::initializer_list<std::pair<int, int>> on) {
  Tensor m({1, h, w});
  for (auto [y, x] : on) m[y * w + x] = 1.0f;
  return m;
}

TEST(Overlap, HandCountedCases) {
  const Tensor a = mask_of(4, 4, {{0, 0}, {0, 1}, {1, 0}, {1, 1}});
  const Tensor b = mask_of(4, 4, {{0, 1}, {1, 1}, {0, 2}, {1, 2}});
  const Tensor far = mask_of(4, 4, {{3, 3}});
  EXPECT_EQ(iou(a, a), 1.0);
  EXPECT_EQ(f1_dice(a, a), 1.0);
  EXPECT_EQ(iou(a, far), 0.0);
  EXPECT_NEAR(iou(a, b), 2.0 / 6.0, 1e-12);
  EXPECT_NEAR(f1_dice(a, b), 0.5, 1e-12);
  const Confusion c = confusion(a, b);
  EXPECT_EQ(c.tp, 2);
  EXPECT_EQ(c.fp, 2);
  EXPECT_EQ(c.fn, 2);
  const Tensor empty({1, 4, 4});
  EXPECT_EQ(iou(empty, empty), 1.0);
  EXPECT_EQ(f1_dice(empty, empty), 1.0);
  EXPECT_EQ(iou(empty, a), 0.0);
}

TEST(Overlap, MatchesSetOracleAndIdentity) {
  Rng rng(1);
  for (int t = 0; t < 200; ++t) {
    const auto h = static_cast<std::int64_t>(1 + rng.below(32)), w = static_cast<std::int64_t>(1 + rng.below(32));
    const double density = rng.uniform() * 0.5;
    const Tensor p = oracle::random_mask(rng, h, w, density), g = oracle::random_mask(rng, h, w, density);
    const double i = iou(p, g), f = f1_dice(p, g);
    EXPECT_EQ(i, oracle::iou(p, g, h, w));
    EXPECT_EQ(f, oracle::f1(p, g, h, w));
    EXPECT_NEAR(f, 2.0 * i / (1.0 + i), 1e-12);
    EXPECT_EQ(i, iou(g, p));
    EXPECT_EQ(f, f1_dice(g, p));
  }
}

TEST(Hd95, HandCases) {
  const Tensor a = mask_of(16, 16, {{3, 2}});
  const Tensor b = mask_of(16, 16, {{3, 7}});
  EXPECT_DOUBLE_EQ(hd95(a, b), 5.0);
  EXPECT_EQ(hd95(a, a), 0.0);
  const Tensor empty({1, 16, 16});
  EXPECT_EQ(hd95(empty, empty), 0.0);
  EXPECT_DOUBLE_EQ(hd95(empty, a), std::hypot(16.0, 16.0));
  EXPECT_DOUBLE_EQ(hd95(a, empty), std::hypot(16.0, 16.0));
}

TEST(Hd95, BoundaryIsFourConnected) {
  Tensor block({1, 5, 5});
  for (int y = 1; y < 4; ++y) {
    for (int x = 1; x < 4; ++x) block[y * 5 + x] = 1.0f;
  }
  const auto b = boundary_pixels(block);
  EXPECT_EQ(b.size(), 8u);
  EXPECT_EQ(std::find(b.begin(), b.end(), std::pair<std::int64_t, std::int64_t>{2, 2}), b.end());
}

TEST(Hd95, MatchesBruteForceOnRandomMasks) {
  Rng rng(2);
  for (int t = 0; t < 150; ++t) {
    const auto h = static_cast<std::int64_t>(2 + rng.below(31)), w = static_cast<std::int64_t>(2 + rng.below(31));
    const Tensor p = oracle::random_mask(rng, h, w, rng.uniform() * 0.3);
    const Tensor g = oracle::random_mask(rng, h, w, rng.uniform() * 0.3);
    EXPECT_NEAR(hd95(p, g), oracle::hd95(p, g, h, w), 1e-4);
    EXPECT_NEAR(hd95(p, g), hd95(g, p), 1e-12);
  }
}

TEST(Percentile, LinearInterpolation) {
  EXPECT_DOUBLE_EQ(percentile({1, 2, 3, 4, 5}, 0.5), 3.0);
  EXPECT_DOUBLE_EQ(percentile({5, 1, 4, 2, 3}, 0.95), 4.8);
  EXPECT_DOUBLE_EQ(percentile({7}, 0.95), 7.0);
  EXPECT_THROW(percentile({}, 0.5), Error);
}

TEST(Binarize, SigmoidThreshold) {
  const Tensor logits({1, 1, 1, 4}, {-1.0f, 0.0f, 0.1f, 3.0f});
  EXPECT_EQ(binarize_logits(logits).storage(), (std::vector<float>{0, 0, 1, 1}));
  // sigmoid(x) > 0.9 holds only for x > ln 9.
  EXPECT_EQ(binarize_logits(logits, 0.9).storage(), (std::vector<float>{0, 0, 0, 1}));
}

data::Dataset dataset(std::uint64_t seed, std::int64_t n) {
  Rng rng(seed);
  return data::synth_weak_targets(n, 32, rng, data::Difficulty::kHard);
}

TEST(Report, PerfectAndBackgroundPredictors) {
  const data::Dataset ds = dataset(3, 6);
  std::vector<Tensor> perfect, blank;
  for (const auto& s : ds.samples) {
    perfect.push_back(s.mask);
    blank.push_back(Tensor(s.mask.shape()));
  }
  const MetricsReport good = evaluate_predictions(perfect, ds);
  EXPECT_EQ(good.mean_iou, 1.0);
  EXPECT_EQ(good.mean_f1, 1.0);
  EXPECT_EQ(good.mean_dice, 1.0);
  EXPECT_EQ(good.mean_hd95, 0.0);
  const MetricsReport bad = evaluate_predictions(blank, ds);
  EXPECT_EQ(bad.mean_iou, 0.0);
  EXPECT_EQ(bad.counts.tp, 0);
  EXPECT_THROW(evaluate_predictions({}, ds), Error);
}

TEST(Report, MeansAreMeansOfPerImageValues) {
  const data::Dataset ds = dataset(4, 9);
  Rng rng(5);
  std::vector<Tensor> preds;
  for (const auto& s : ds.samples) {
    Tensor p = s.mask;
    for (auto& v : p.data()) {
      if (rng.uniform() < 0.01) v = 1.0f - v;
    }
    preds.push_back(p);
  }
  const MetricsReport r = evaluate_predictions(preds, ds);
  ASSERT_EQ(r.per_image.size(), 9u);
  double si = 0, sf = 0, sh = 0;
  std::int64_t tp = 0;
  for (std::size_t i = 0; i < 9; ++i) {
    const auto& m = r.per_image[i];
    EXPECT_EQ(m.id, ds.samples[i].id);
    EXPECT_EQ(m.iou, oracle::iou(preds[i], ds.samples[i].mask, 32, 32));
    EXPECT_NEAR(m.hd95, oracle::hd95(preds[i], ds.samples[i].mask, 32, 32), 1e-4);
    EXPECT_EQ(m.dice, m.f1);
    si += m.iou;
    sf += m.f1;
    sh += m.hd95;
    tp += m.counts.tp;
  }
  EXPECT_NEAR(r.mean_iou, si / 9, 1e-12);
  EXPECT_NEAR(r.mean_f1, sf / 9, 1e-12);
  EXPECT_NEAR(r.mean_hd95, sh / 9, 1e-12);
  EXPECT_EQ(r.counts.tp, tp);

  const auto j = nlohmann::json::parse(r.to_json());
  EXPECT_NEAR(j["mean"]["iou"].get<double>(), r.mean_iou, 1e-12);
  EXPECT_EQ(j["per_image"].size(), 9u);
  std::istringstream csv(r.to_csv());
  std::string line;
  std::getline(csv, line);
  EXPECT_EQ(line, "id,iou,f1,dice,hd95,tp,fp,fn");
  int rows = 0;
  std::string last;
  while (std::getline(csv, line)) {
    ++rows;
    last = line;
  }
  EXPECT_EQ(rows, 10);
  EXPECT_EQ(last.rfind("mean,", 0), 0u);
}

TEST(Evaluate, ModelPathRestoresModeAndReportsSize) {
  model::ModelConfig cfg;
  cfg.widths = {4, 8, 8, 12};
  cfg.dpconv.c_in = 4;
  cfg.dpconv.c_info = 8;
  cfg.variant = model::Variant::kPureSeg;
  model::SRSModel m(cfg, 1);
  const data::Dataset ds = dataset(6, 5);
  EXPECT_TRUE(m.training());
  const MetricsReport r = evaluate(m, ds, 0.5, 2);
  EXPECT_TRUE(m.training());
  EXPECT_EQ(r.per_image.size(), 5u);
  EXPECT_EQ(r.params, model::count_model_params(m));
  EXPECT_EQ(r.flops, model::count_flops(m, {1, 1, 32, 32}));
  EXPECT_GE(r.mean_iou, 0.0);
  EXPECT_LE(r.mean_iou, 1.0);
  const MetricsReport again = evaluate(m, ds, 0.5, 3);
  EXPECT_EQ(again.mean_iou, r.mean_iou);
}

}  // namespace
}  // namespace srs::metrics
