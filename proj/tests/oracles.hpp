// Copyright 2026 The SRS Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Independent reference computations used by the unit and acceptance tests.
// Each one is written from the definition, without sharing code with the
// implementation it checks.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <set>
#include <utility>
#include <vector>

#include "srs/kernels.hpp"
#include "srs/rng.hpp"
#include "srs/tensor.hpp"

namespace srs::oracle {

using Pixel = std::pair<std::int64_t, std::int64_t>;

inline std::set<Pixel> positives(const Tensor& m, std::int64_t h, std::int64_t w) {
  std::set<Pixel> out;
  for (std::int64_t y = 0; y < h; ++y) {
    for (std::int64_t x = 0; x < w; ++x) {
      if (m[y * w + x] > 0.5f) out.insert({y, x});
    }
  }
  return out;
}

inline std::size_t intersection_size(const std::set<Pixel>& a, const std::set<Pixel>& b) {
  std::vector<Pixel> both;
  std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(both));
  return both.size();
}

inline double iou(const Tensor& pred, const Tensor& gt, std::int64_t h, std::int64_t w) {
  const auto p = positives(pred, h, w), g = positives(gt, h, w);
  std::set<Pixel> uni = p;
  uni.insert(g.begin(), g.end());
  if (uni.empty()) return 1.0;
  return static_cast<double>(intersection_size(p, g)) / static_cast<double>(uni.size());
}

inline double f1(const Tensor& pred, const Tensor& gt, std::int64_t h, std::int64_t w) {
  const auto p = positives(pred, h, w), g = positives(gt, h, w);
  if (p.empty() && g.empty()) return 1.0;
  return 2.0 * static_cast<double>(intersection_size(p, g)) / static_cast<double>(p.size() + g.size());
}

inline std::vector<Pixel> boundary(const Tensor& m, std::int64_t h, std::int64_t w) {
  const auto pos = positives(m, h, w);
  std::vector<Pixel> out;
  for (const auto& [y, x] : pos) {
    const Pixel nb[4] = {{y - 1, x}, {y + 1, x}, {y, x - 1}, {y, x + 1}};
    bool edge = false;
    for (const auto& q : nb) edge = edge || pos.count(q) == 0;
    if (edge) out.push_back({y, x});
  }
  return out;
}

// All-pairs boundary distances, pooled in both directions.
inline double hd95(const Tensor& pred, const Tensor& gt, std::int64_t h, std::int64_t w) {
  const auto bp = boundary(pred, h, w), bg = boundary(gt, h, w);
  if (bp.empty() && bg.empty()) return 0.0;
  if (bp.empty() || bg.empty()) return std::hypot(static_cast<double>(h), static_cast<double>(w));
  auto nearest = [](const Pixel& a, const std::vector<Pixel>& set) {
    double best = 1e300;
    for (const auto& b : set) {
      best = std::min(best, std::hypot(static_cast<double>(a.first - b.first), static_cast<double>(a.second - b.second)));
    }
    return best;
  };
  std::vector<double> d;
  for (const auto& a : bp) d.push_back(nearest(a, bg));
  for (const auto& b : bg) d.push_back(nearest(b, bp));
  std::sort(d.begin(), d.end());
  const double rank = 0.95 * static_cast<double>(d.size() - 1);
  const auto lo = static_cast<std::size_t>(rank);
  if (lo + 1 >= d.size()) return d.back();
  return d[lo] + (rank - static_cast<double>(lo)) * (d[lo + 1] - d[lo]);
}

inline Tensor random_mask(Rng& rng, std::int64_t h, std::int64_t w, double density) {
  Tensor m({1, h, w});
  for (auto& v : m.data()) v = rng.uniform() < density ? 1.0f : 0.0f;
  return m;
}

/// Sample-by-sample application of per-sample kernels with the serial
/// reference convolution: out_b = conv(x_b, kernel block b), same padding.
template <typename T>
BasicTensor<T> dpconv_per_sample(const BasicTensor<T>& x, const BasicTensor<T>& kernel) {
  const std::int64_t b = x.dim(0), cin = x.dim(1);
  const std::int64_t cout = kernel.dim(0) / b, k = kernel.dim(2);
  std::vector<BasicTensor<T>> outs;
  for (std::int64_t n = 0; n < b; ++n) {
    BasicTensor<T> xb = batch_item(x, n);
    std::vector<T> kd(kernel.ptr() + n * cout * cin * k * k, kernel.ptr() + (n + 1) * cout * cin * k * k);
    BasicTensor<T> kb({cout, cin, k, k}, std::move(kd));
    outs.push_back(kernels::conv2d_naive<T>(xb, kb, nullptr, 1, (k - 1) / 2, 1));
  }
  return concat_batch(outs);
}

}  // namespace srs::oracle
