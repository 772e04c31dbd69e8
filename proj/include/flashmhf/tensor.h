// Copyright 2026 The FlashMHF Authors
// SPDX-License-Identifier: Apache-2.0
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <algorithm>
#include <array>
#include <concepts>
#include <cstddef>
#include <functional>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "flashmhf/errors.h"

namespace flashmhf {

using Shape = std::vector<std::size_t>;

std::string shape_string(const Shape& shape);

enum class Precision { kSingle, kDouble };

template <typename T>
concept Real = std::same_as<T, float> || std::same_as<T, double>;

template <Real T>
constexpr Precision precision_of() {
  return std::same_as<T, float> ? Precision::kSingle : Precision::kDouble;
}

// Dense row-major tensor. Extents are all >= 1 and the flat buffer always
// holds exactly product(shape) elements.
template <Real T>
class Tensor {
 public:
  using value_type = T;

  Tensor() = default;

  explicit Tensor(Shape shape) : shape_(std::move(shape)) {
    validate_shape();
    data_.assign(element_count(shape_), T{0});
    compute_strides();
  }

  Tensor(Shape shape, std::vector<T> data)
      : shape_(std::move(shape)), data_(std::move(data)) {
    validate_shape();
    if (data_.size() != element_count(shape_)) {
      throw DimensionError("tensor data has " + std::to_string(data_.size()) +
                           " elements but shape " + shape_string(shape_) +
                           " needs " + std::to_string(element_count(shape_)));
    }
    compute_strides();
  }

  static Tensor zeros(Shape shape) { return Tensor(std::move(shape)); }

  static Tensor full(Shape shape, T value) {
    Tensor t(std::move(shape));
    std::fill(t.data_.begin(), t.data_.end(), value);
    return t;
  }

  static Tensor identity(std::size_t n) {
    Tensor t({n, n});
    for (std::size_t i = 0; i < n; ++i) t(i, i) = T{1};
    return t;
  }

  // Row-major nested-list literal for rank-2 tensors.
  static Tensor matrix(std::initializer_list<std::initializer_list<T>> rows) {
    const std::size_t m = rows.size();
    const std::size_t n = m == 0 ? 0 : rows.begin()->size();
    std::vector<T> data;
    data.reserve(m * n);
    for (const auto& row : rows) {
      if (row.size() != n) throw DimensionError("ragged matrix literal");
      data.insert(data.end(), row.begin(), row.end());
    }
    return Tensor({m, n}, std::move(data));
  }

  const Shape& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t extent(std::size_t axis) const { return shape_.at(axis); }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }
  const std::vector<std::size_t>& strides() const { return strides_; }

  std::span<T> data() { return data_; }
  std::span<const T> data() const { return data_; }
  T* raw() { return data_.data(); }
  const T* raw() const { return data_.data(); }

  T& operator[](std::size_t flat) { return data_[flat]; }
  const T& operator[](std::size_t flat) const { return data_[flat]; }

  // Unchecked multi-index access; the index count must equal rank().
  template <std::integral... I>
  T& operator()(I... idx) {
    return data_[offset(idx...)];
  }
  template <std::integral... I>
  const T& operator()(I... idx) const {
    return data_[offset(idx...)];
  }

  std::size_t flat_index(std::span<const std::size_t> idx) const {
    if (idx.size() != shape_.size()) {
      throw RankError("index of rank " + std::to_string(idx.size()) +
                      " for tensor of shape " + shape_string(shape_));
    }
    std::size_t flat = 0;
    for (std::size_t a = 0; a < idx.size(); ++a) {
      if (idx[a] >= shape_[a]) {
        throw DimensionError("index " + std::to_string(idx[a]) +
                             " out of range on axis " + std::to_string(a) +
                             " of shape " + shape_string(shape_));
      }
      flat += idx[a] * strides_[a];
    }
    return flat;
  }

  T at(std::span<const std::size_t> idx) const { return data_[flat_index(idx)]; }
  void set(std::span<const std::size_t> idx, T value) {
    data_[flat_index(idx)] = value;
  }

  // Same buffer, new extents; the element count must be preserved.
  Tensor reshaped(Shape shape) const {
    return Tensor(std::move(shape), data_);
  }

  template <Real U>
  Tensor<U> cast() const {
    std::vector<U> out(data_.begin(), data_.end());
    return Tensor<U>(shape_, std::move(out));
  }

  void fill(T value) { std::fill(data_.begin(), data_.end(), value); }

  bool operator==(const Tensor&) const = default;

  static std::size_t element_count(const Shape& shape) {
    return std::accumulate(shape.begin(), shape.end(), std::size_t{1},
                           std::multiplies<>());
  }

 private:
  void validate_shape() const {
    for (std::size_t e : shape_) {
      if (e == 0) {
        throw DimensionError("tensor extents must be >= 1, got " +
                             shape_string(shape_));
      }
    }
  }

  void compute_strides() {
    strides_.assign(shape_.size(), 1);
    for (std::size_t a = shape_.size(); a-- > 1;) {
      strides_[a - 1] = strides_[a] * shape_[a];
    }
  }

  template <std::integral... I>
  std::size_t offset(I... idx) const {
    const std::array<std::size_t, sizeof...(I)> ix{static_cast<std::size_t>(idx)...};
    std::size_t flat = 0;
    for (std::size_t a = 0; a < ix.size(); ++a) flat += ix[a] * strides_[a];
    return flat;
  }

  Shape shape_;
  std::vector<T> data_;
  std::vector<std::size_t> strides_;
};

using TensorD = Tensor<double>;
using TensorF = Tensor<float>;

inline std::string shape_string(const Shape& shape) {
  std::string s = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += "x";
    s += std::to_string(shape[i]);
  }
  return s + "]";
}

}  // namespace flashmhf
