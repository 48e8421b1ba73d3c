// Copyright 2026 The SRS Authors
// SPDX-License-Identifier: Apache-2.0

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <vector>

#include "srs/data.hpp"

namespace srs::data {

namespace {

struct Decoded {
  std::int64_t channels = 0;
  std::int64_t height = 0;
  std::int64_t width = 0;
  std::vector<png_byte> pixels;  // interleaved
};

Decoded decode(const std::string& path) {
  png_image image;
  std::memset(&image, 0, sizeof image);
  image.version = PNG_IMAGE_VERSION;
  if (png_image_begin_read_from_file(&image, path.c_str()) == 0) {
    const std::string msg = image.message;
    png_image_free(&image);
    fail(ErrorKind::kIoError, "cannot read PNG " + path + ": " + msg);
  }
  const png_uint_32 native = image.format;
  if (native != PNG_FORMAT_GRAY && native != PNG_FORMAT_RGB) {
    png_image_free(&image);
    fail(ErrorKind::kUnsupportedFormat, path + " is not an 8-bit grayscale or RGB PNG");
  }
  Decoded d;
  d.channels = native == PNG_FORMAT_GRAY ? 1 : 3;
  d.height = image.height;
  d.width = image.width;
  d.pixels.resize(PNG_IMAGE_SIZE(image));
  if (png_image_finish_read(&image, nullptr, d.pixels.data(), 0, nullptr) == 0) {
    const std::string msg = image.message;
    png_image_free(&image);
    fail(ErrorKind::kIoError, "cannot decode PNG " + path + ": " + msg);
  }
  return d;
}

}  // namespace

Tensor read_png(const std::string& path) {
  const Decoded d = decode(path);
  Tensor out({d.channels, d.height, d.width});
  const std::int64_t plane = d.height * d.width;
  for (std::int64_t i = 0; i < plane; ++i) {
    for (std::int64_t c = 0; c < d.channels; ++c) {
      out.ptr()[c * plane + i] = static_cast<float>(d.pixels[static_cast<std::size_t>(i * d.channels + c)]) / 255.0f;
    }
  }
  return out;
}

Tensor read_png_mask(const std::string& path) {
  const Decoded d = decode(path);
  require(d.channels == 1, ErrorKind::kUnsupportedFormat, path + ": masks must be 8-bit grayscale");
  Tensor out({1, d.height, d.width});
  for (std::int64_t i = 0; i < d.height * d.width; ++i) out.ptr()[i] = d.pixels[static_cast<std::size_t>(i)] >= 128 ? 1.0f : 0.0f;
  return out;
}

void write_png(const std::string& path, const Tensor& chw) {
  require(chw.rank() == 3 && (chw.dim(0) == 1 || chw.dim(0) == 3), ErrorKind::kUnsupportedFormat,
          "PNG output needs a (1|3, H, W) tensor, got " + shape_str(chw.shape()));
  const std::int64_t c = chw.dim(0), h = chw.dim(1), w = chw.dim(2), plane = h * w;
  std::vector<png_byte> pixels(static_cast<std::size_t>(c * plane));
  for (std::int64_t i = 0; i < plane; ++i) {
    for (std::int64_t ch = 0; ch < c; ++ch) {
      const float v = std::clamp(chw.ptr()[ch * plane + i], 0.0f, 1.0f);
      pixels[static_cast<std::size_t>(i * c + ch)] = static_cast<png_byte>(std::lround(v * 255.0f));
    }
  }
  png_image image;
  std::memset(&image, 0, sizeof image);
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(w);
  image.height = static_cast<png_uint_32>(h);
  image.format = c == 1 ? PNG_FORMAT_GRAY : PNG_FORMAT_RGB;
  if (png_image_write_to_file(&image, path.c_str(), 0, pixels.data(), 0, nullptr) == 0) {
    const std::string msg = image.message;
    png_image_free(&image);
    fail(ErrorKind::kIoError, "cannot write PNG " + path + ": " + msg);
  }
}

}  // namespace srs::data
