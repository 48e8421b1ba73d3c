// Copyright 2026 The SRS Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <initializer_list>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "srs/error.hpp"

namespace srs {

using Shape = std::vector<std::int64_t>;

std::int64_t shape_numel(const Shape& shape);
std::string shape_str(const Shape& shape);

/// Dense row-major tensor. Every dimension is positive and the buffer holds
/// exactly numel() elements. A default-constructed tensor is "undefined" and
/// has no shape at all.
template <typename T>
class BasicTensor {
 public:
  using value_type = T;

  BasicTensor() = default;
  explicit BasicTensor(Shape shape, T fill = T(0));
  BasicTensor(Shape shape, std::vector<T> data);

  static BasicTensor zeros(Shape shape) { return BasicTensor(std::move(shape), T(0)); }
  static BasicTensor ones(Shape shape) { return BasicTensor(std::move(shape), T(1)); }
  static BasicTensor full(Shape shape, T value) { return BasicTensor(std::move(shape), value); }
  static BasicTensor zeros_like(const BasicTensor& other) { return BasicTensor(other.shape(), T(0)); }

  bool defined() const noexcept { return !shape_.empty(); }
  const Shape& shape() const noexcept { return shape_; }
  std::size_t rank() const noexcept { return shape_.size(); }
  std::int64_t dim(std::size_t axis) const;
  std::int64_t numel() const noexcept { return static_cast<std::int64_t>(data_.size()); }

  std::span<T> data() noexcept { return data_; }
  std::span<const T> data() const noexcept { return data_; }
  T* ptr() noexcept { return data_.data(); }
  const T* ptr() const noexcept { return data_.data(); }
  const std::vector<T>& storage() const noexcept { return data_; }

  T& operator[](std::int64_t i) { return data_[static_cast<std::size_t>(i)]; }
  const T& operator[](std::int64_t i) const { return data_[static_cast<std::size_t>(i)]; }

  // 4-D accessor for (B, C, H, W) tensors; no bounds checks.
  T& at(std::int64_t n, std::int64_t c, std::int64_t h, std::int64_t w) {
    return data_[static_cast<std::size_t>(((n * shape_[1] + c) * shape_[2] + h) * shape_[3] + w)];
  }
  const T& at(std::int64_t n, std::int64_t c, std::int64_t h, std::int64_t w) const {
    return data_[static_cast<std::size_t>(((n * shape_[1] + c) * shape_[2] + h) * shape_[3] + w)];
  }

  /// Same elements, new shape. Throws ShapeMismatch if the products differ.
  BasicTensor reshape(Shape new_shape) const;

  void fill(T value);

  template <typename U>
  BasicTensor<U> cast() const {
    std::vector<U> out(data_.begin(), data_.end());
    return BasicTensor<U>(shape_, std::move(out));
  }

  bool operator==(const BasicTensor& other) const = default;

 private:
  Shape shape_;
  std::vector<T> data_;
};

using Tensor = BasicTensor<float>;
using TensorD = BasicTensor<double>;

enum class BinaryOp { kAdd, kSub, kMul };

template <typename T>
BasicTensor<T> elementwise_binary(const BasicTensor<T>& a, const BasicTensor<T>& b, BinaryOp op);

/// Mean over the listed axes; reduced axes keep size 1.
template <typename T>
BasicTensor<T> reduce_mean(const BasicTensor<T>& t, const std::set<int>& axes);

template <typename T>
BasicTensor<T> reduce_sum(const BasicTensor<T>& t, const std::set<int>& axes);

template <typename T>
T max_abs_diff(const BasicTensor<T>& a, const BasicTensor<T>& b);

template <typename T>
bool bitwise_equal(const BasicTensor<T>& a, const BasicTensor<T>& b);

template <typename T>
T sum_all(const BasicTensor<T>& t);

template <typename T>
double squared_norm(const BasicTensor<T>& t);

/// Channel slice [begin, end) along axis 1 of a (B, C, ...) tensor.
template <typename T>
BasicTensor<T> slice_channels(const BasicTensor<T>& t, std::int64_t begin, std::int64_t end);

/// Concatenate tensors along axis 0.
template <typename T>
BasicTensor<T> concat_batch(const std::vector<BasicTensor<T>>& parts);

/// Sample `index` of a batch, keeping a leading size-1 axis.
template <typename T>
BasicTensor<T> batch_item(const BasicTensor<T>& t, std::int64_t index);

}  // namespace srs
