// Copyright 2026 The SRS Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Binary-mask metrics. Masks are tensors whose last two axes are (H, W) and
// whose values are 0 or 1; pred and gt must have equal shapes.

#include <cstdint>
#include <string>
#include <vector>

#include "srs/data.hpp"
#include "srs/model.hpp"

namespace srs::metrics {

struct Confusion {
  std::int64_t tp = 0;
  std::int64_t fp = 0;
  std::int64_t fn = 0;
};
Confusion confusion(const Tensor& pred, const Tensor& gt);

/// |pred & gt| / |pred | gt|; 1 when both are empty.
double iou(const Tensor& pred, const Tensor& gt);
/// 2 |pred & gt| / (|pred| + |gt|); 1 when both are empty.
double f1_dice(const Tensor& pred, const Tensor& gt);

/// Positive pixels with at least one background 4-neighbour; pixels outside
/// the image count as background. Row-major (y, x) pairs.
std::vector<std::pair<std::int64_t, std::int64_t>> boundary_pixels(const Tensor& mask);

/// 95th percentile (linear interpolation) of the pooled distances from each
/// pred boundary pixel to the gt boundary and from each gt boundary pixel to
/// the pred boundary, in pixels. 0 when both are empty; the image diagonal
/// when exactly one is empty. Uses exact Euclidean distance transforms.
double hd95(const Tensor& pred, const Tensor& gt);

/// Linear-interpolation percentile of unsorted values, q in [0, 1].
double percentile(std::vector<double> values, double q);

/// 1 where the sigmoid of the logit exceeds the threshold.
Tensor binarize_logits(const Tensor& logits, double threshold = 0.5);

struct ImageMetrics {
  std::string id;
  double iou = 0.0;
  double f1 = 0.0;
  double dice = 0.0;
  double hd95 = 0.0;
  Confusion counts;
};

struct MetricsReport {
  std::vector<ImageMetrics> per_image;
  double mean_iou = 0.0;
  double mean_f1 = 0.0;
  double mean_dice = 0.0;
  double mean_hd95 = 0.0;
  Confusion counts;
  std::int64_t params = 0;
  std::int64_t flops = 0;

  /// {"mean": {...}, "counts": {...}, "model": {...}, "per_image": [...]}
  std::string to_json() const;
  /// Header id,iou,f1,dice,hd95,tp,fp,fn then one row per image and a final
  /// "mean" row.
  std::string to_csv() const;
};

/// preds[i] is the binary prediction for gt.samples[i].
MetricsReport evaluate_predictions(const std::vector<Tensor>& preds, const data::Dataset& gt);

/// Inference-mode segmentation of every test sample, thresholded at
/// `threshold`. Restores the model's training flag afterwards.
MetricsReport evaluate(model::SRSModel& model, const data::Dataset& test_set, double threshold = 0.5,
                       std::int64_t batch_size = 8);

}  // namespace srs::metrics
