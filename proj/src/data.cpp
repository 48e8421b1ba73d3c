// Copyright 2026 The SRS Authors
// SPDX-License-Identifier: Apache-2.0

#include "srs/data.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <numbers>
#include <set>

namespace srs::data {

namespace fs = std::filesystem;

namespace {

constexpr std::uint64_t kFnvOffset = 1469598103934665603ULL;
constexpr std::uint64_t kFnvPrime = 1099511628211ULL;

void fnv(std::uint64_t& h, const void* data, std::size_t n) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= kFnvPrime;
  }
}

void fnv_tensor(std::uint64_t& h, const Tensor& t) {
  if (!t.defined()) {
    fnv(h, "-", 1);
    return;
  }
  for (auto d : t.shape()) fnv(h, &d, sizeof d);
  fnv(h, t.ptr(), sizeof(float) * static_cast<std::size_t>(t.numel()));
}

double uniform(Rng& rng, double lo, double hi) { return lo + (hi - lo) * rng.uniform(); }

// Smooth texture: a few random low-frequency plane waves plus white noise.
std::vector<double> background(std::int64_t size, Rng& rng, double base, double texture, double noise) {
  std::vector<double> img(static_cast<std::size_t>(size * size), base);
  for (int wave = 0; wave < 4; ++wave) {
    const double angle = uniform(rng, 0.0, 2.0 * std::numbers::pi);
    const double freq = uniform(rng, 0.5, 3.0) * 2.0 * std::numbers::pi / static_cast<double>(size);
    const double phase = uniform(rng, 0.0, 2.0 * std::numbers::pi);
    const double amp = texture * uniform(rng, 0.25, 1.0);
    const double fx = freq * std::cos(angle), fy = freq * std::sin(angle);
    for (std::int64_t y = 0; y < size; ++y) {
      for (std::int64_t x = 0; x < size; ++x) {
        img[y * size + x] += amp * std::sin(fx * static_cast<double>(x) + fy * static_cast<double>(y) + phase);
      }
    }
  }
  for (auto& v : img) v += noise * rng.normal();
  return img;
}

struct Blob {
  double cx, cy, ra, rb, theta;
  // Normalized elliptical radius; <= 1 inside.
  double radius(double x, double y) const {
    const double dx = x - cx, dy = y - cy;
    const double u = (dx * std::cos(theta) + dy * std::sin(theta)) / ra;
    const double v = (-dx * std::sin(theta) + dy * std::cos(theta)) / rb;
    return std::sqrt(u * u + v * v);
  }
};

Sample finish(std::vector<double>& img, std::vector<float>& mask, std::int64_t size, std::string id) {
  Sample s;
  std::vector<float> pix(img.size());
  for (std::size_t i = 0; i < img.size(); ++i) pix[i] = static_cast<float>(std::clamp(img[i], 0.0, 1.0));
  s.image = Tensor({1, size, size}, std::move(pix));
  s.mask = Tensor({1, size, size}, std::move(mask));
  s.id = std::move(id);
  return s;
}

Sample synth_easy(std::int64_t size, Rng& rng, std::string id) {
  const double scale = static_cast<double>(size) / 64.0;
  const auto npix = static_cast<double>(size * size);
  for (;;) {
    std::vector<double> img = background(size, rng, uniform(rng, 0.3, 0.5), 0.05, 0.02);
    std::vector<float> mask(static_cast<std::size_t>(size * size), 0.0f);
    const int blobs = 1 + static_cast<int>(rng.below(2));
    for (int b = 0; b < blobs; ++b) {
      const double ra = uniform(rng, 4.0, 9.0) * scale, rb = uniform(rng, 4.0, 9.0) * scale;
      const double margin = std::max(ra, rb) + 1.0;
      Blob blob{uniform(rng, margin, size - margin), uniform(rng, margin, size - margin), ra, rb,
                uniform(rng, 0.0, std::numbers::pi)};
      const double contrast = uniform(rng, 0.1, 0.3);
      for (std::int64_t y = 0; y < size; ++y) {
        for (std::int64_t x = 0; x < size; ++x) {
          const double r = blob.radius(static_cast<double>(x), static_cast<double>(y));
          // Super-Gaussian profile: half contrast exactly at the mask boundary.
          img[y * size + x] += contrast * std::exp(-std::log(2.0) * std::pow(r, 8.0));
          if (r <= 1.0) mask[y * size + x] = 1.0f;
        }
      }
    }
    double area = 0.0;
    for (float m : mask) area += m;
    if (area >= 0.005 * npix && area <= 0.10 * npix) return finish(img, mask, size, std::move(id));
  }
}

Sample synth_hard(std::int64_t size, Rng& rng, std::string id) {
  std::vector<double> img = background(size, rng, uniform(rng, 0.2, 0.4), 0.1, 0.04);
  std::vector<float> mask(static_cast<std::size_t>(size * size), 0.0f);
  // Clutter: extended bright structures that are not targets.
  const int clutter = 3 + static_cast<int>(rng.below(4));
  for (int c = 0; c < clutter; ++c) {
    Blob blob{uniform(rng, 0, size), uniform(rng, 0, size), uniform(rng, 2.0, 8.0), uniform(rng, 1.2, 4.0),
              uniform(rng, 0.0, std::numbers::pi)};
    const double contrast = uniform(rng, 0.05, 0.25);
    for (std::int64_t y = 0; y < size; ++y) {
      for (std::int64_t x = 0; x < size; ++x) {
        const double r = blob.radius(static_cast<double>(x), static_cast<double>(y));
        img[y * size + x] += contrast * std::exp(-0.5 * r * r);
      }
    }
  }
  const int targets = 1 + static_cast<int>(rng.below(2));
  const int dx[4] = {1, -1, 0, 0}, dy[4] = {0, 0, 1, -1};
  for (int t = 0; t < targets; ++t) {
    const auto want = static_cast<std::size_t>(1 + rng.below(9));
    std::int64_t cx = 2 + static_cast<std::int64_t>(rng.below(static_cast<std::uint64_t>(size - 4)));
    std::int64_t cy = 2 + static_cast<std::int64_t>(rng.below(static_cast<std::uint64_t>(size - 4)));
    std::vector<std::pair<std::int64_t, std::int64_t>> pts{{cx, cy}};
    std::set<std::pair<std::int64_t, std::int64_t>> seen{{cx, cy}};
    // Random connected growth inside a 3x3 neighbourhood of the seed.
    for (int guard = 0; pts.size() < want && guard < 200; ++guard) {
      const auto base = pts[rng.below(pts.size())];
      const int d = static_cast<int>(rng.below(4));
      const std::pair<std::int64_t, std::int64_t> next{base.first + dx[d], base.second + dy[d]};
      if (std::abs(next.first - cx) > 1 || std::abs(next.second - cy) > 1) continue;
      if (seen.insert(next).second) pts.push_back(next);
    }
    // Faint core with a soft halo, so the mask edge is not a plain threshold.
    const double contrast = uniform(rng, 0.08, 0.2);
    for (const auto& [x, y] : pts) {
      mask[y * size + x] = 1.0f;
      for (std::int64_t oy = -1; oy <= 1; ++oy) {
        for (std::int64_t ox = -1; ox <= 1; ++ox) {
          const std::int64_t yy = y + oy, xx = x + ox;
          if (yy < 0 || yy >= size || xx < 0 || xx >= size) continue;
          img[yy * size + xx] += (ox == 0 && oy == 0 ? 0.7 : 0.1) * contrast;
        }
      }
    }
  }
  return finish(img, mask, size, std::move(id));
}

void transform_plane(const float* src, float* dst, std::int64_t h, std::int64_t w, int t) {
  const int rot = t % 4;
  const bool flip = t >= 4;
  const std::int64_t oh = rot % 2 == 0 ? h : w, ow = rot % 2 == 0 ? w : h;
  for (std::int64_t y = 0; y < oh; ++y) {
    for (std::int64_t x = 0; x < ow; ++x) {
      const std::int64_t xr = flip ? ow - 1 - x : x;
      std::int64_t sy = 0, sx = 0;
      switch (rot) {
        case 0:
          sy = y, sx = xr;
          break;
        case 1:  // 90 degrees counter-clockwise
          sy = xr, sx = w - 1 - y;
          break;
        case 2:
          sy = h - 1 - y, sx = w - 1 - xr;
          break;
        default:
          sy = h - 1 - xr, sx = y;
          break;
      }
      dst[y * ow + x] = src[sy * w + sx];
    }
  }
}

std::vector<std::string> png_stems(const std::string& dir) {
  std::vector<std::string> stems;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    std::string ext = entry.path().extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
    if (ext == ".png") stems.push_back(entry.path().stem().string());
  }
  std::sort(stems.begin(), stems.end());
  return stems;
}

}  // namespace

void validate_sample(const Sample& s) {
  require(s.image.defined() && s.image.rank() == 3, ErrorKind::kShapeMismatch, "sample image must be (C,H,W)");
  for (float v : s.image.data()) {
    require(std::isfinite(v) && v >= 0.0f && v <= 1.0f, ErrorKind::kInvalidArgument,
            "sample " + s.id + " has pixel values outside [0,1]");
  }
  if (!s.has_mask()) return;
  require(s.mask.shape() == Shape{1, s.image.dim(1), s.image.dim(2)}, ErrorKind::kShapeMismatch,
          "mask of " + s.id + " must be (1,H,W) matching the image");
  for (float v : s.mask.data()) {
    require(v == 0.0f || v == 1.0f, ErrorKind::kNonBinaryTarget, "mask of " + s.id + " is not binary");
  }
}

bool Dataset::labeled() const {
  return !samples.empty() && std::all_of(samples.begin(), samples.end(), [](const Sample& s) { return s.has_mask(); });
}

std::uint64_t Dataset::checksum() const {
  std::uint64_t h = kFnvOffset;
  for (const auto& s : samples) {
    fnv(h, s.id.data(), s.id.size());
    fnv_tensor(h, s.image);
    fnv_tensor(h, s.mask);
  }
  return h;
}

std::string_view to_string(Difficulty d) { return d == Difficulty::kEasy ? "easy" : "hard"; }

Difficulty parse_difficulty(std::string_view name) {
  if (name == "easy") return Difficulty::kEasy;
  if (name == "hard") return Difficulty::kHard;
  fail(ErrorKind::kInvalidArgument, "unknown difficulty '" + std::string(name) + "' (expected easy or hard)");
}

Dataset synth_weak_targets(std::int64_t n, std::int64_t size, Rng& rng, Difficulty difficulty, std::int64_t multiple) {
  require(n > 0, ErrorKind::kInvalidArgument, "sample count must be positive");
  require(multiple > 0 && size >= 16 && size % multiple == 0, ErrorKind::kDivisibilityError,
          "image size " + std::to_string(size) + " must be at least 16 and divisible by " + std::to_string(multiple));
  Dataset ds;
  ds.samples.reserve(static_cast<std::size_t>(n));
  for (std::int64_t i = 0; i < n; ++i) {
    char id[32];
    std::snprintf(id, sizeof id, "synth_%05lld", static_cast<long long>(i));
    ds.samples.push_back(difficulty == Difficulty::kEasy ? synth_easy(size, rng, id) : synth_hard(size, rng, id));
  }
  return ds;
}

std::int64_t train_count(std::int64_t n, double train_fraction) {
  // Exact for the default 7:3 ratio, avoiding 0.7 * n rounding artefacts.
  if (train_fraction == 0.7) return n * 7 / 10;
  return static_cast<std::int64_t>(std::floor(train_fraction * static_cast<double>(n)));
}

std::pair<Dataset, Dataset> split_7_3(const Dataset& dataset, const SplitSpec& spec) {
  require(!dataset.empty(), ErrorKind::kEmptyDataset, "cannot split an empty dataset");
  require(spec.train_fraction > 0.0 && spec.train_fraction < 1.0, ErrorKind::kInvalidArgument,
          "train fraction must lie in (0, 1)");
  std::vector<std::size_t> order(dataset.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  Rng rng(spec.seed, 0x5eed);
  for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);
  const auto n_train = static_cast<std::size_t>(train_count(static_cast<std::int64_t>(dataset.size()), spec.train_fraction));
  std::pair<Dataset, Dataset> out;
  for (std::size_t i = 0; i < order.size(); ++i) {
    (i < n_train ? out.first : out.second).samples.push_back(dataset.samples[order[i]]);
  }
  return out;
}

Tensor resize_image(const Tensor& image, std::int64_t height, std::int64_t width) {
  require(image.rank() == 3, ErrorKind::kShapeMismatch, "resize expects (C,H,W)");
  require(height > 0 && width > 0, ErrorKind::kInvalidArgument, "resize target must be positive");
  const std::int64_t c = image.dim(0), h = image.dim(1), w = image.dim(2);
  if (h == height && w == width) return image;
  Tensor out({c, height, width});
  const double sy = static_cast<double>(h) / static_cast<double>(height);
  const double sx = static_cast<double>(w) / static_cast<double>(width);
  for (std::int64_t y = 0; y < height; ++y) {
    const double fy = std::clamp((static_cast<double>(y) + 0.5) * sy - 0.5, 0.0, static_cast<double>(h - 1));
    const auto y0 = static_cast<std::int64_t>(fy);
    const std::int64_t y1 = std::min(y0 + 1, h - 1);
    const double wy = fy - static_cast<double>(y0);
    for (std::int64_t x = 0; x < width; ++x) {
      const double fx = std::clamp((static_cast<double>(x) + 0.5) * sx - 0.5, 0.0, static_cast<double>(w - 1));
      const auto x0 = static_cast<std::int64_t>(fx);
      const std::int64_t x1 = std::min(x0 + 1, w - 1);
      const double wx = fx - static_cast<double>(x0);
      for (std::int64_t ch = 0; ch < c; ++ch) {
        const float* p = image.ptr() + ch * h * w;
        const double top = p[y0 * w + x0] * (1 - wx) + p[y0 * w + x1] * wx;
        const double bot = p[y1 * w + x0] * (1 - wx) + p[y1 * w + x1] * wx;
        out.ptr()[(ch * height + y) * width + x] = static_cast<float>(top * (1 - wy) + bot * wy);
      }
    }
  }
  return out;
}

Tensor resize_mask(const Tensor& mask, std::int64_t height, std::int64_t width) {
  require(mask.rank() == 3, ErrorKind::kShapeMismatch, "resize expects (C,H,W)");
  require(height > 0 && width > 0, ErrorKind::kInvalidArgument, "resize target must be positive");
  const std::int64_t c = mask.dim(0), h = mask.dim(1), w = mask.dim(2);
  Tensor out({c, height, width});
  for (std::int64_t ch = 0; ch < c; ++ch) {
    for (std::int64_t y = 0; y < height; ++y) {
      const std::int64_t sy = std::min(h - 1, y * h / height);
      for (std::int64_t x = 0; x < width; ++x) {
        const std::int64_t sx = std::min(w - 1, x * w / width);
        out.ptr()[(ch * height + y) * width + x] = mask.ptr()[(ch * h + sy) * w + sx] >= 0.5f ? 1.0f : 0.0f;
      }
    }
  }
  return out;
}

Sample resize_to(const Sample& sample, std::int64_t side) {
  require(side > 0, ErrorKind::kInvalidArgument, "resize side must be positive");
  Sample out{resize_image(sample.image, side, side), Tensor(), sample.id};
  if (sample.has_mask()) out.mask = resize_mask(sample.mask, side, side);
  return out;
}

int inverse_transform(int transform) {
  require(transform >= 0 && transform < kNumTransforms, ErrorKind::kInvalidArgument, "transform index out of range");
  return transform >= 4 ? transform : (4 - transform) % 4;
}

Tensor apply_transform(const Tensor& chw, int transform) {
  require(transform >= 0 && transform < kNumTransforms, ErrorKind::kInvalidArgument, "transform index out of range");
  require(chw.rank() == 3, ErrorKind::kShapeMismatch, "transform expects (C,H,W)");
  const std::int64_t c = chw.dim(0), h = chw.dim(1), w = chw.dim(2);
  const bool swap = (transform % 4) % 2 == 1;
  Tensor out({c, swap ? w : h, swap ? h : w});
  for (std::int64_t ch = 0; ch < c; ++ch) transform_plane(chw.ptr() + ch * h * w, out.ptr() + ch * h * w, h, w, transform);
  return out;
}

Sample augment(const Sample& sample, int transform) {
  Sample out{apply_transform(sample.image, transform), Tensor(), sample.id};
  if (sample.has_mask()) out.mask = apply_transform(sample.mask, transform);
  return out;
}

Sample augment(const Sample& sample, Rng& rng) {
  return augment(sample, static_cast<int>(rng.below(kNumTransforms)));
}

Batch make_batch(const Dataset& dataset, const std::vector<std::size_t>& indices) {
  require(!indices.empty(), ErrorKind::kEmptyDataset, "empty batch");
  const Sample& first = dataset.samples.at(indices[0]);
  const Shape& s = first.image.shape();
  const std::int64_t per = shape_numel(s), plane = s[1] * s[2];
  const auto b = static_cast<std::int64_t>(indices.size());
  bool labeled = true;
  for (auto i : indices) labeled = labeled && dataset.samples.at(i).has_mask();
  Batch batch;
  batch.images = Tensor({b, s[0], s[1], s[2]});
  if (labeled) batch.masks = Tensor({b, 1, s[1], s[2]});
  for (std::int64_t k = 0; k < b; ++k) {
    const Sample& smp = dataset.samples[indices[static_cast<std::size_t>(k)]];
    require(smp.image.shape() == s, ErrorKind::kShapeMismatch, "batch samples differ in shape");
    std::memcpy(batch.images.ptr() + k * per, smp.image.ptr(), sizeof(float) * static_cast<std::size_t>(per));
    if (labeled) std::memcpy(batch.masks.ptr() + k * plane, smp.mask.ptr(), sizeof(float) * static_cast<std::size_t>(plane));
  }
  return batch;
}

Dataset load_image_dir(const std::string& images_dir, const std::string& masks_dir, std::int64_t side) {
  require(fs::is_directory(images_dir), ErrorKind::kIoError, "image directory not found: " + images_dir);
  const bool labeled = !masks_dir.empty();
  if (labeled) require(fs::is_directory(masks_dir), ErrorKind::kIoError, "mask directory not found: " + masks_dir);
  const auto stems = png_stems(images_dir);
  require(!stems.empty(), ErrorKind::kEmptyDataset, "no PNG images in " + images_dir);
  Dataset ds;
  for (const auto& stem : stems) {
    Sample s;
    s.id = stem;
    s.image = read_png((fs::path(images_dir) / (stem + ".png")).string());
    if (labeled) {
      const fs::path mask_path = fs::path(masks_dir) / (stem + ".png");
      require(fs::exists(mask_path), ErrorKind::kMissingMask, "no mask for image " + stem + ".png in " + masks_dir);
      s.mask = read_png_mask(mask_path.string());
      require(s.mask.dim(1) == s.image.dim(1) && s.mask.dim(2) == s.image.dim(2), ErrorKind::kShapeMismatch,
              "mask and image sizes differ for " + stem);
    }
    if (side > 0) s = resize_to(s, side);
    if (!ds.empty()) {
      require(s.image.shape() == ds.samples[0].image.shape(), ErrorKind::kShapeMismatch,
              "image " + stem + " differs in shape from the first image; pass a resize side");
    }
    ds.samples.push_back(std::move(s));
  }
  return ds;
}

Dataset load_dataset_root(const std::string& root, std::int64_t side) {
  const fs::path masks = fs::path(root) / "masks";
  return load_image_dir((fs::path(root) / "images").string(), fs::is_directory(masks) ? masks.string() : "", side);
}

void export_dataset(const Dataset& dataset, const std::string& root) {
  const fs::path images = fs::path(root) / "images", masks = fs::path(root) / "masks";
  std::error_code ec;
  fs::create_directories(images, ec);
  require(!ec, ErrorKind::kIoError, "cannot create " + images.string() + ": " + ec.message());
  if (dataset.labeled()) {
    fs::create_directories(masks, ec);
    require(!ec, ErrorKind::kIoError, "cannot create " + masks.string() + ": " + ec.message());
  }
  for (const auto& s : dataset.samples) {
    write_png((images / (s.id + ".png")).string(), s.image);
    if (s.has_mask()) write_png((masks / (s.id + ".png")).string(), s.mask);
  }
}

}  // namespace srs::data
