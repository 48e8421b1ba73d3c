// Copyright 2026 The SRS Authors
// SPDX-License-Identifier: Apache-2.0

#include "srs/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <sstream>

namespace srs {

std::int64_t shape_numel(const Shape& shape) {
  std::int64_t n = 1;
  for (auto d : shape) n *= d;
  return n;
}

std::string shape_str(const Shape& shape) {
  std::ostringstream os;
  os << "(";
  for (std::size_t i = 0; i < shape.size(); ++i) os << (i ? "," : "") << shape[i];
  os << ")";
  return os.str();
}

namespace {

void check_dims(const Shape& shape) {
  require(!shape.empty(), ErrorKind::kInvalidArgument, "tensor shape must have at least one axis");
  for (auto d : shape) {
    require(d > 0, ErrorKind::kInvalidArgument, "tensor dimensions must be positive, got " + shape_str(shape));
  }
}

void check_same_shape(const Shape& a, const Shape& b, const char* what) {
  require(a == b, ErrorKind::kShapeMismatch, std::string(what) + ": " + shape_str(a) + " vs " + shape_str(b));
}

// Splits `shape` around a contiguous run of axes for strided reductions.
struct AxisSplit {
  std::int64_t outer, mid, inner;
};

}  // namespace

template <typename T>
BasicTensor<T>::BasicTensor(Shape shape, T fill) : shape_(std::move(shape)) {
  check_dims(shape_);
  data_.assign(static_cast<std::size_t>(shape_numel(shape_)), fill);
}

template <typename T>
BasicTensor<T>::BasicTensor(Shape shape, std::vector<T> data) : shape_(std::move(shape)), data_(std::move(data)) {
  check_dims(shape_);
  require(static_cast<std::int64_t>(data_.size()) == shape_numel(shape_), ErrorKind::kShapeMismatch,
          "buffer of " + std::to_string(data_.size()) + " elements for shape " + shape_str(shape_));
}

template <typename T>
std::int64_t BasicTensor<T>::dim(std::size_t axis) const {
  require(axis < shape_.size(), ErrorKind::kInvalidAxis,
          "axis " + std::to_string(axis) + " out of range for " + shape_str(shape_));
  return shape_[axis];
}

template <typename T>
BasicTensor<T> BasicTensor<T>::reshape(Shape new_shape) const {
  check_dims(new_shape);
  require(shape_numel(new_shape) == numel(), ErrorKind::kShapeMismatch,
          "cannot reshape " + shape_str(shape_) + " to " + shape_str(new_shape));
  return BasicTensor(std::move(new_shape), data_);
}

template <typename T>
void BasicTensor<T>::fill(T value) {
  std::fill(data_.begin(), data_.end(), value);
}

template <typename T>
BasicTensor<T> elementwise_binary(const BasicTensor<T>& a, const BasicTensor<T>& b, BinaryOp op) {
  check_same_shape(a.shape(), b.shape(), "elementwise_binary");
  BasicTensor<T> out(a.shape());
  const T* pa = a.ptr();
  const T* pb = b.ptr();
  T* po = out.ptr();
  const std::int64_t n = a.numel();
  switch (op) {
    case BinaryOp::kAdd:
#pragma omp parallel for schedule(static) if (n > 65536)
      for (std::int64_t i = 0; i < n; ++i) po[i] = pa[i] + pb[i];
      break;
    case BinaryOp::kSub:
#pragma omp parallel for schedule(static) if (n > 65536)
      for (std::int64_t i = 0; i < n; ++i) po[i] = pa[i] - pb[i];
      break;
    case BinaryOp::kMul:
#pragma omp parallel for schedule(static) if (n > 65536)
      for (std::int64_t i = 0; i < n; ++i) po[i] = pa[i] * pb[i];
      break;
  }
  return out;
}

template <typename T>
BasicTensor<T> reduce_sum(const BasicTensor<T>& t, const std::set<int>& axes) {
  const int rank = static_cast<int>(t.rank());
  for (int axis : axes) {
    require(axis >= 0 && axis < rank, ErrorKind::kInvalidAxis,
            "axis " + std::to_string(axis) + " invalid for " + shape_str(t.shape()));
  }
  if (axes.empty()) return t;

  // Reduce one axis at a time, highest first, each as an (outer, mid, inner)
  // strided sum accumulated in double.
  BasicTensor<T> cur = t;
  for (auto it = axes.rbegin(); it != axes.rend(); ++it) {
    const int axis = *it;
    const Shape& s = cur.shape();
    AxisSplit split{1, s[static_cast<std::size_t>(axis)], 1};
    for (int i = 0; i < axis; ++i) split.outer *= s[static_cast<std::size_t>(i)];
    for (int i = axis + 1; i < rank; ++i) split.inner *= s[static_cast<std::size_t>(i)];
    Shape out_shape = s;
    out_shape[static_cast<std::size_t>(axis)] = 1;
    BasicTensor<T> out(out_shape);
    const T* src = cur.ptr();
    T* dst = out.ptr();
    for (std::int64_t o = 0; o < split.outer; ++o) {
      for (std::int64_t in = 0; in < split.inner; ++in) {
        double acc = 0.0;
        for (std::int64_t m = 0; m < split.mid; ++m) acc += static_cast<double>(src[(o * split.mid + m) * split.inner + in]);
        dst[o * split.inner + in] = static_cast<T>(acc);
      }
    }
    cur = std::move(out);
  }
  return cur;
}

template <typename T>
BasicTensor<T> reduce_mean(const BasicTensor<T>& t, const std::set<int>& axes) {
  if (axes.empty()) {
    return t;
  }
  // Sum in double and divide once so the mean of an all-ones tensor is exact.
  BasicTensor<double> wide = reduce_sum(t.template cast<double>(), axes);
  std::int64_t count = 1;
  for (int axis : axes) count *= t.shape()[static_cast<std::size_t>(axis)];
  BasicTensor<T> out(wide.shape());
  for (std::int64_t i = 0; i < out.numel(); ++i) out[i] = static_cast<T>(wide[i] / static_cast<double>(count));
  return out;
}

template <typename T>
T max_abs_diff(const BasicTensor<T>& a, const BasicTensor<T>& b) {
  check_same_shape(a.shape(), b.shape(), "max_abs_diff");
  T m = 0;
  for (std::int64_t i = 0; i < a.numel(); ++i) m = std::max(m, static_cast<T>(std::abs(a[i] - b[i])));
  return m;
}

template <typename T>
bool bitwise_equal(const BasicTensor<T>& a, const BasicTensor<T>& b) {
  return a.shape() == b.shape() &&
         std::memcmp(a.ptr(), b.ptr(), static_cast<std::size_t>(a.numel()) * sizeof(T)) == 0;
}

template <typename T>
T sum_all(const BasicTensor<T>& t) {
  double acc = 0.0;
  for (auto v : t.data()) acc += static_cast<double>(v);
  return static_cast<T>(acc);
}

template <typename T>
double squared_norm(const BasicTensor<T>& t) {
  double acc = 0.0;
  for (auto v : t.data()) acc += static_cast<double>(v) * static_cast<double>(v);
  return acc;
}

template <typename T>
BasicTensor<T> slice_channels(const BasicTensor<T>& t, std::int64_t begin, std::int64_t end) {
  require(t.rank() >= 2, ErrorKind::kShapeMismatch, "slice_channels needs rank >= 2");
  const std::int64_t channels = t.shape()[1];
  require(0 <= begin && begin < end && end <= channels, ErrorKind::kInvalidArgument, "bad channel range");
  std::int64_t inner = 1;
  for (std::size_t i = 2; i < t.rank(); ++i) inner *= t.shape()[i];
  Shape out_shape = t.shape();
  out_shape[1] = end - begin;
  BasicTensor<T> out(out_shape);
  const std::int64_t batch = t.shape()[0];
  for (std::int64_t n = 0; n < batch; ++n) {
    std::copy_n(t.ptr() + (n * channels + begin) * inner, (end - begin) * inner, out.ptr() + n * (end - begin) * inner);
  }
  return out;
}

template <typename T>
BasicTensor<T> concat_batch(const std::vector<BasicTensor<T>>& parts) {
  require(!parts.empty(), ErrorKind::kInvalidArgument, "concat_batch of nothing");
  Shape out_shape = parts.front().shape();
  std::int64_t total = 0;
  for (const auto& p : parts) {
    require(p.rank() == out_shape.size() && std::equal(p.shape().begin() + 1, p.shape().end(), out_shape.begin() + 1),
            ErrorKind::kShapeMismatch, "concat_batch: trailing dims differ");
    total += p.shape()[0];
  }
  out_shape[0] = total;
  std::vector<T> data;
  data.reserve(static_cast<std::size_t>(shape_numel(out_shape)));
  for (const auto& p : parts) data.insert(data.end(), p.data().begin(), p.data().end());
  return BasicTensor<T>(out_shape, std::move(data));
}

template <typename T>
BasicTensor<T> batch_item(const BasicTensor<T>& t, std::int64_t index) {
  require(index >= 0 && index < t.dim(0), ErrorKind::kInvalidArgument, "batch index out of range");
  Shape out_shape = t.shape();
  out_shape[0] = 1;
  const std::int64_t stride = t.numel() / t.shape()[0];
  std::vector<T> data(t.ptr() + index * stride, t.ptr() + (index + 1) * stride);
  return BasicTensor<T>(out_shape, std::move(data));
}

#define SRS_INSTANTIATE_TENSOR(T)                                                                     \
  template class BasicTensor<T>;                                                                     \
  template BasicTensor<T> elementwise_binary(const BasicTensor<T>&, const BasicTensor<T>&, BinaryOp); \
  template BasicTensor<T> reduce_mean(const BasicTensor<T>&, const std::set<int>&);                   \
  template BasicTensor<T> reduce_sum(const BasicTensor<T>&, const std::set<int>&);                    \
  template T max_abs_diff(const BasicTensor<T>&, const BasicTensor<T>&);                              \
  template bool bitwise_equal(const BasicTensor<T>&, const BasicTensor<T>&);                          \
  template T sum_all(const BasicTensor<T>&);                                                          \
  template double squared_norm(const BasicTensor<T>&);                                                \
  template BasicTensor<T> slice_channels(const BasicTensor<T>&, std::int64_t, std::int64_t);          \
  template BasicTensor<T> concat_batch(const std::vector<BasicTensor<T>>&);                           \
  template BasicTensor<T> batch_item(const BasicTensor<T>&, std::int64_t);

SRS_INSTANTIATE_TENSOR(float)
SRS_INSTANTIATE_TENSOR(double)

}  // namespace srs
