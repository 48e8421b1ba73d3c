// Copyright 2026 The SRS Authors
// SPDX-License-Identifier: Apache-2.0

#include "srs/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include <json.hpp>

namespace srs::metrics {

namespace {

constexpr double kFar = 1e12;

struct Plane {
  std::int64_t h = 0;
  std::int64_t w = 0;
};

Plane plane_of(const Tensor& pred, const Tensor& gt) {
  require(pred.defined() && gt.defined(), ErrorKind::kShapeMismatch, "metric inputs must be defined");
  require(pred.shape() == gt.shape(), ErrorKind::kShapeMismatch,
          "pred " + shape_str(pred.shape()) + " vs gt " + shape_str(gt.shape()));
  require(pred.rank() >= 2, ErrorKind::kShapeMismatch, "masks need at least two axes");
  const std::int64_t h = pred.dim(pred.rank() - 2), w = pred.dim(pred.rank() - 1);
  require(pred.numel() == h * w, ErrorKind::kShapeMismatch, "metrics take one mask at a time");
  return {h, w};
}

// Felzenszwalb-Huttenlocher 1-D squared distance transform of f (n values).
void edt_1d(const double* f, double* d, std::int64_t n, std::vector<std::int64_t>& v, std::vector<double>& z) {
  v.assign(static_cast<std::size_t>(n), 0);
  z.assign(static_cast<std::size_t>(n + 1), 0.0);
  std::int64_t k = 0;
  v[0] = 0;
  z[0] = -std::numeric_limits<double>::infinity();
  z[1] = std::numeric_limits<double>::infinity();
  for (std::int64_t q = 1; q < n; ++q) {
    const auto qd = static_cast<double>(q);
    auto intersect = [&](std::int64_t p) {
      const auto pd = static_cast<double>(p);
      return ((f[q] + qd * qd) - (f[p] + pd * pd)) / (2.0 * qd - 2.0 * pd);
    };
    double s = intersect(v[k]);
    while (s <= z[k]) {
      --k;
      s = intersect(v[k]);
    }
    ++k;
    v[k] = q;
    z[k] = s;
    z[k + 1] = std::numeric_limits<double>::infinity();
  }
  k = 0;
  for (std::int64_t q = 0; q < n; ++q) {
    while (z[k + 1] < static_cast<double>(q)) ++k;
    const double diff = static_cast<double>(q - v[k]);
    d[q] = diff * diff + f[v[k]];
  }
}

// Squared Euclidean distance from every pixel to the nearest site.
std::vector<double> squared_distance_to(const std::vector<std::pair<std::int64_t, std::int64_t>>& sites,
                                        std::int64_t h, std::int64_t w) {
  std::vector<double> grid(static_cast<std::size_t>(h * w), kFar);
  for (const auto& [y, x] : sites) grid[y * w + x] = 0.0;
  std::vector<std::int64_t> v;
  std::vector<double> z;
  std::vector<double> col(static_cast<std::size_t>(h)), out(static_cast<std::size_t>(std::max(h, w)));
  for (std::int64_t x = 0; x < w; ++x) {
    for (std::int64_t y = 0; y < h; ++y) col[y] = grid[y * w + x];
    edt_1d(col.data(), out.data(), h, v, z);
    for (std::int64_t y = 0; y < h; ++y) grid[y * w + x] = out[y];
  }
  std::vector<double> row(static_cast<std::size_t>(w));
  for (std::int64_t y = 0; y < h; ++y) {
    std::copy(grid.begin() + y * w, grid.begin() + (y + 1) * w, row.begin());
    edt_1d(row.data(), grid.data() + y * w, w, v, z);
  }
  return grid;
}

double safe_ratio(std::int64_t num, std::int64_t den) {
  return den == 0 ? 1.0 : static_cast<double>(num) / static_cast<double>(den);
}

}  // namespace

Confusion confusion(const Tensor& pred, const Tensor& gt) {
  plane_of(pred, gt);
  Confusion c;
  for (std::int64_t i = 0; i < pred.numel(); ++i) {
    const bool p = pred[i] >= 0.5f, g = gt[i] >= 0.5f;
    c.tp += p && g;
    c.fp += p && !g;
    c.fn += !p && g;
  }
  return c;
}

double iou(const Tensor& pred, const Tensor& gt) {
  const Confusion c = confusion(pred, gt);
  return safe_ratio(c.tp, c.tp + c.fp + c.fn);
}

double f1_dice(const Tensor& pred, const Tensor& gt) {
  const Confusion c = confusion(pred, gt);
  return safe_ratio(2 * c.tp, 2 * c.tp + c.fp + c.fn);
}

std::vector<std::pair<std::int64_t, std::int64_t>> boundary_pixels(const Tensor& mask) {
  require(mask.rank() >= 2, ErrorKind::kShapeMismatch, "masks need at least two axes");
  const std::int64_t h = mask.dim(mask.rank() - 2), w = mask.dim(mask.rank() - 1);
  require(mask.numel() == h * w, ErrorKind::kShapeMismatch, "metrics take one mask at a time");
  auto on = [&](std::int64_t y, std::int64_t x) {
    return y >= 0 && y < h && x >= 0 && x < w && mask[y * w + x] >= 0.5f;
  };
  std::vector<std::pair<std::int64_t, std::int64_t>> out;
  for (std::int64_t y = 0; y < h; ++y) {
    for (std::int64_t x = 0; x < w; ++x) {
      if (on(y, x) && (!on(y - 1, x) || !on(y + 1, x) || !on(y, x - 1) || !on(y, x + 1))) out.emplace_back(y, x);
    }
  }
  return out;
}

double percentile(std::vector<double> values, double q) {
  require(!values.empty(), ErrorKind::kInvalidArgument, "percentile of an empty set");
  require(q >= 0.0 && q <= 1.0, ErrorKind::kInvalidArgument, "percentile rank must lie in [0, 1]");
  std::sort(values.begin(), values.end());
  const double pos = q * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (pos - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

double hd95(const Tensor& pred, const Tensor& gt) {
  const Plane p = plane_of(pred, gt);
  const auto bp = boundary_pixels(pred), bg = boundary_pixels(gt);
  if (bp.empty() && bg.empty()) return 0.0;
  if (bp.empty() || bg.empty()) return std::sqrt(static_cast<double>(p.h * p.h + p.w * p.w));
  const auto to_gt = squared_distance_to(bg, p.h, p.w);
  const auto to_pred = squared_distance_to(bp, p.h, p.w);
  std::vector<double> dist;
  dist.reserve(bp.size() + bg.size());
  for (const auto& [y, x] : bp) dist.push_back(std::sqrt(to_gt[y * p.w + x]));
  for (const auto& [y, x] : bg) dist.push_back(std::sqrt(to_pred[y * p.w + x]));
  return percentile(std::move(dist), 0.95);
}

Tensor binarize_logits(const Tensor& logits, double threshold) {
  require(threshold > 0.0 && threshold < 1.0, ErrorKind::kInvalidArgument, "threshold must lie in (0, 1)");
  Tensor out(logits.shape());
  for (std::int64_t i = 0; i < logits.numel(); ++i) {
    const double prob = 1.0 / (1.0 + std::exp(-static_cast<double>(logits[i])));
    out[i] = prob > threshold ? 1.0f : 0.0f;
  }
  return out;
}

std::string MetricsReport::to_json() const {
  nlohmann::json j;
  j["mean"] = {{"iou", mean_iou}, {"f1", mean_f1}, {"dice", mean_dice}, {"hd95", mean_hd95}};
  j["counts"] = {{"tp", counts.tp}, {"fp", counts.fp}, {"fn", counts.fn}};
  j["model"] = {{"params", params}, {"flops", flops}};
  j["per_image"] = nlohmann::json::array();
  for (const auto& m : per_image) {
    j["per_image"].push_back({{"id", m.id},
                              {"iou", m.iou},
                              {"f1", m.f1},
                              {"dice", m.dice},
                              {"hd95", m.hd95},
                              {"tp", m.counts.tp},
                              {"fp", m.counts.fp},
                              {"fn", m.counts.fn}});
  }
  return j.dump(2);
}

std::string MetricsReport::to_csv() const {
  std::ostringstream os;
  os.precision(8);
  os << "id,iou,f1,dice,hd95,tp,fp,fn\n";
  for (const auto& m : per_image) {
    os << m.id << ',' << m.iou << ',' << m.f1 << ',' << m.dice << ',' << m.hd95 << ',' << m.counts.tp << ','
       << m.counts.fp << ',' << m.counts.fn << '\n';
  }
  os << "mean," << mean_iou << ',' << mean_f1 << ',' << mean_dice << ',' << mean_hd95 << ',' << counts.tp << ','
     << counts.fp << ',' << counts.fn << '\n';
  return os.str();
}

MetricsReport evaluate_predictions(const std::vector<Tensor>& preds, const data::Dataset& gt) {
  require(!gt.empty(), ErrorKind::kEmptyDataset, "evaluation set is empty");
  require(gt.labeled(), ErrorKind::kMissingMask, "evaluation set has unlabeled samples");
  require(preds.size() == gt.size(), ErrorKind::kShapeMismatch, "one prediction per sample is required");
  MetricsReport r;
  r.per_image.resize(gt.size());
  // Per-image metrics are independent; the means are reduced in order below.
#pragma omp parallel for schedule(dynamic)
  for (std::size_t i = 0; i < gt.size(); ++i) {
    const Tensor& g = gt.samples[i].mask;
    ImageMetrics m;
    m.id = gt.samples[i].id;
    m.counts = confusion(preds[i], g);
    m.iou = safe_ratio(m.counts.tp, m.counts.tp + m.counts.fp + m.counts.fn);
    m.f1 = safe_ratio(2 * m.counts.tp, 2 * m.counts.tp + m.counts.fp + m.counts.fn);
    m.dice = m.f1;
    m.hd95 = hd95(preds[i], g);
    r.per_image[i] = std::move(m);
  }
  for (const auto& m : r.per_image) {
    r.mean_iou += m.iou;
    r.mean_f1 += m.f1;
    r.mean_dice += m.dice;
    r.mean_hd95 += m.hd95;
    r.counts.tp += m.counts.tp;
    r.counts.fp += m.counts.fp;
    r.counts.fn += m.counts.fn;
  }
  const auto n = static_cast<double>(r.per_image.size());
  r.mean_iou /= n;
  r.mean_f1 /= n;
  r.mean_dice /= n;
  r.mean_hd95 /= n;
  return r;
}

MetricsReport evaluate(model::SRSModel& model, const data::Dataset& test_set, double threshold,
                       std::int64_t batch_size) {
  require(!test_set.empty(), ErrorKind::kEmptyDataset, "evaluation set is empty");
  require(batch_size > 0, ErrorKind::kInvalidArgument, "batch size must be positive");
  const bool was_training = model.training();
  model.set_training(false);
  std::vector<Tensor> preds;
  preds.reserve(test_set.size());
  {
    NoGradGuard guard;
    for (std::size_t start = 0; start < test_set.size(); start += static_cast<std::size_t>(batch_size)) {
      std::vector<std::size_t> idx;
      for (std::size_t i = start; i < std::min(test_set.size(), start + static_cast<std::size_t>(batch_size)); ++i) {
        idx.push_back(i);
      }
      const data::Batch batch = data::make_batch(test_set, idx);
      const Tensor logits = model.seg_forward(model::FVar(batch.images)).logits.value();
      const Tensor bin = binarize_logits(logits, threshold);
      for (std::size_t k = 0; k < idx.size(); ++k) {
        const Shape& mask_shape = test_set.samples[idx[k]].image.shape();
        preds.push_back(batch_item(bin, static_cast<std::int64_t>(k)).reshape({1, mask_shape[1], mask_shape[2]}));
      }
    }
  }
  model.set_training(was_training);
  MetricsReport r = evaluate_predictions(preds, test_set);
  r.params = model.param_count();
  const Shape& s0 = test_set.samples[0].image.shape();
  r.flops = model.flops({1, s0[0], s0[1], s0[2]});
  return r;
}

}  // namespace srs::metrics
