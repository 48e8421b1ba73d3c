// Copyright 2026 The SRS Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "srs/rng.hpp"
#include "srs/tensor.hpp"

namespace srs::data {

/// image (C, H, W) in [0, 1]; mask (1, H, W) in {0, 1}, undefined when the
/// sample is unlabeled.
struct Sample {
  Tensor image;
  Tensor mask;
  std::string id;

  bool has_mask() const { return mask.defined(); }
};

/// Throws InvalidArgument (non-finite or out-of-range image),
/// NonBinaryTarget, or ShapeMismatch.
void validate_sample(const Sample& s);

struct Dataset {
  std::vector<Sample> samples;

  std::size_t size() const { return samples.size(); }
  bool empty() const { return samples.empty(); }
  bool labeled() const;
  /// FNV-1a over ids, shapes and raw bytes.
  std::uint64_t checksum() const;
};

enum class Difficulty { kEasy, kHard };
std::string_view to_string(Difficulty d);
Difficulty parse_difficulty(std::string_view name);

/// Grayscale images of faint targets on textured noise with exact masks.
/// easy: 1-2 super-Gaussian blobs, contrast 0.1-0.3, covering 0.5%-10% of
/// the image. hard: 1-2 point targets of 1-9 pixels among brighter extended
/// clutter. `size` must be divisible by `multiple`.
Dataset synth_weak_targets(std::int64_t n, std::int64_t size, Rng& rng, Difficulty difficulty,
                           std::int64_t multiple = 8);

struct SplitSpec {
  double train_fraction = 0.7;
  std::uint64_t seed = 0;
};

/// Seeded shuffle, then floor(train_fraction * n) train samples and the rest
/// for test.
std::pair<Dataset, Dataset> split_7_3(const Dataset& dataset, const SplitSpec& spec);
std::int64_t train_count(std::int64_t n, double train_fraction);

/// Bilinear with half-pixel centers.
Tensor resize_image(const Tensor& image, std::int64_t height, std::int64_t width);
/// Nearest neighbour, then re-binarized at 0.5.
Tensor resize_mask(const Tensor& mask, std::int64_t height, std::int64_t width);
Sample resize_to(const Sample& sample, std::int64_t side);

/// The eight symmetries of the square: rotation by 90 * (t % 4) degrees
/// counter-clockwise, followed by a horizontal flip when t >= 4.
constexpr int kNumTransforms = 8;
Tensor apply_transform(const Tensor& chw, int transform);
int inverse_transform(int transform);
Sample augment(const Sample& sample, int transform);
Sample augment(const Sample& sample, Rng& rng);

/// Stacks samples[indices] into (B, C, H, W) images and (B, 1, H, W) masks
/// (masks left undefined when any sample is unlabeled).
struct Batch {
  Tensor images;
  Tensor masks;
};
Batch make_batch(const Dataset& dataset, const std::vector<std::size_t>& indices);

// 8-bit PNG. Grayscale and RGB only; anything else is UnsupportedFormat.
Tensor read_png(const std::string& path);
/// Thresholded at 128 into {0, 1}.
Tensor read_png_mask(const std::string& path);
/// Values are clamped to [0, 1] and rounded to 8 bits. 1 or 3 channels.
void write_png(const std::string& path, const Tensor& chw);

/// Pairs <images_dir>/<stem>.png with <masks_dir>/<stem>.png. An empty
/// masks_dir loads unlabeled images. side > 0 resizes every sample.
Dataset load_image_dir(const std::string& images_dir, const std::string& masks_dir, std::int64_t side = 0);
/// <root>/images and, when present, <root>/masks.
Dataset load_dataset_root(const std::string& root, std::int64_t side = 0);
/// Writes the <root>/images, <root>/masks layout.
void export_dataset(const Dataset& dataset, const std::string& root);

}  // namespace srs::data
