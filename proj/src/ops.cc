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

#include "flashmhf/ops.h"

#include <cmath>
#include <string>

namespace flashmhf {

void require_same_shape(const Shape& a, const Shape& b, const char* what) {
  if (a != b) {
    throw DimensionError(std::string(what) + ": shape mismatch " +
                         shape_string(a) + " vs " + shape_string(b));
  }
}

void require_rank(const Shape& s, std::size_t rank, const char* what) {
  if (s.size() != rank) {
    throw RankError(std::string(what) + ": expected rank " +
                    std::to_string(rank) + ", got shape " + shape_string(s));
  }
}

template <Real T>
Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b) {
  require_rank(a.shape(), 2, "matmul lhs");
  require_rank(b.shape(), 2, "matmul rhs");
  const std::size_t m = a.extent(0), k = a.extent(1), n = b.extent(1);
  if (b.extent(0) != k) {
    throw DimensionError("matmul: inner extents differ, " +
                         shape_string(a.shape()) + " x " +
                         shape_string(b.shape()));
  }
  Tensor<T> c({m, n});
  std::vector<double> acc(n);
  for (std::size_t i = 0; i < m; ++i) {
    std::fill(acc.begin(), acc.end(), 0.0);
    for (std::size_t t = 0; t < k; ++t) {
      const double ait = a(i, t);
      const T* brow = b.raw() + t * n;
      for (std::size_t j = 0; j < n; ++j) acc[j] += ait * brow[j];
    }
    for (std::size_t j = 0; j < n; ++j) c(i, j) = static_cast<T>(acc[j]);
  }
  return c;
}

template <Real T>
Tensor<T> matmul_nt(const Tensor<T>& a, const Tensor<T>& b) {
  require_rank(a.shape(), 2, "matmul_nt lhs");
  require_rank(b.shape(), 2, "matmul_nt rhs");
  const std::size_t m = a.extent(0), k = a.extent(1), n = b.extent(0);
  if (b.extent(1) != k) {
    throw DimensionError("matmul_nt: inner extents differ, " +
                         shape_string(a.shape()) + " x " +
                         shape_string(b.shape()) + "^T");
  }
  Tensor<T> c({m, n});
  for (std::size_t i = 0; i < m; ++i) {
    const T* arow = a.raw() + i * k;
    for (std::size_t j = 0; j < n; ++j) {
      const T* brow = b.raw() + j * k;
      double acc = 0.0;
      for (std::size_t t = 0; t < k; ++t) acc += double(arow[t]) * brow[t];
      c(i, j) = static_cast<T>(acc);
    }
  }
  return c;
}

template <Real T>
Tensor<T> matmul_tn(const Tensor<T>& a, const Tensor<T>& b) {
  require_rank(a.shape(), 2, "matmul_tn lhs");
  require_rank(b.shape(), 2, "matmul_tn rhs");
  const std::size_t k = a.extent(0), m = a.extent(1), n = b.extent(1);
  if (b.extent(0) != k) {
    throw DimensionError("matmul_tn: inner extents differ, " +
                         shape_string(a.shape()) + "^T x " +
                         shape_string(b.shape()));
  }
  std::vector<double> acc(m * n, 0.0);
  for (std::size_t t = 0; t < k; ++t) {
    const T* arow = a.raw() + t * m;
    const T* brow = b.raw() + t * n;
    for (std::size_t i = 0; i < m; ++i) {
      const double ati = arow[i];
      double* crow = acc.data() + i * n;
      for (std::size_t j = 0; j < n; ++j) crow[j] += ati * brow[j];
    }
  }
  Tensor<T> c({m, n});
  for (std::size_t i = 0; i < acc.size(); ++i) c[i] = static_cast<T>(acc[i]);
  return c;
}

template <Real T>
Tensor<T> transpose2d(const Tensor<T>& a) {
  require_rank(a.shape(), 2, "transpose2d");
  const std::size_t m = a.extent(0), n = a.extent(1);
  Tensor<T> b({n, m});
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) b(j, i) = a(i, j);
  return b;
}

namespace {

template <Real T, typename F>
Tensor<T> zip(const Tensor<T>& a, const Tensor<T>& b, const char* what, F f) {
  require_same_shape(a.shape(), b.shape(), what);
  Tensor<T> c(a.shape());
  for (std::size_t i = 0; i < a.size(); ++i) c[i] = f(a[i], b[i]);
  return c;
}

}  // namespace

template <Real T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b) {
  return zip(a, b, "add", [](T x, T y) { return x + y; });
}

template <Real T>
Tensor<T> add(const Tensor<T>& a, T scalar) {
  Tensor<T> c = a;
  for (auto& x : c.data()) x += scalar;
  return c;
}

template <Real T>
Tensor<T> sub(const Tensor<T>& a, const Tensor<T>& b) {
  return zip(a, b, "sub", [](T x, T y) { return x - y; });
}

template <Real T>
Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b) {
  return zip(a, b, "mul", [](T x, T y) { return x * y; });
}

template <Real T>
Tensor<T> scale(const Tensor<T>& a, T factor) {
  Tensor<T> c = a;
  for (auto& x : c.data()) x *= factor;
  return c;
}

template <Real T>
void accumulate(Tensor<T>& dst, const Tensor<T>& src) {
  require_same_shape(dst.shape(), src.shape(), "accumulate");
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
}

template <Real T>
double sum(const Tensor<T>& a) {
  double s = 0.0;
  for (T x : a.data()) s += x;
  return s;
}

template <Real T>
double max_abs_diff(const Tensor<T>& a, const Tensor<T>& b) {
  require_same_shape(a.shape(), b.shape(), "max_abs_diff");
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    m = std::max(m, std::abs(double(a[i]) - double(b[i])));
  return m;
}

template <Real T>
double max_rel_error(const Tensor<T>& a, const Tensor<T>& b) {
  require_same_shape(a.shape(), b.shape(), "max_rel_error");
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double x = a[i], y = b[i];
    const double denom = std::max({1.0, std::abs(x), std::abs(y)});
    const double err = std::abs(x - y) / denom;
    if (std::isnan(err)) return err;
    m = std::max(m, err);
  }
  return m;
}

template <Real T>
bool all_finite(const Tensor<T>& a) {
  for (T x : a.data())
    if (!std::isfinite(x)) return false;
  return true;
}

namespace {

std::pair<std::size_t, Shape> locate_block(const Shape& shape,
                                           std::initializer_list<std::size_t> lead) {
  if (lead.size() >= shape.size()) {
    throw RankError("subtensor: " + std::to_string(lead.size()) +
                    " leading indices for shape " + shape_string(shape));
  }
  Shape tail(shape.begin() + lead.size(), shape.end());
  const std::size_t block = Tensor<double>::element_count(tail);
  std::size_t offset = 0, a = 0;
  for (std::size_t i : lead) {
    if (i >= shape[a]) {
      throw DimensionError("subtensor: index " + std::to_string(i) +
                           " out of range for shape " + shape_string(shape));
    }
    offset = offset * shape[a] + i;
    ++a;
  }
  return {offset * block, std::move(tail)};
}

}  // namespace

template <Real T>
Tensor<T> subtensor(const Tensor<T>& t, std::initializer_list<std::size_t> lead) {
  auto [offset, tail] = locate_block(t.shape(), lead);
  const std::size_t n = Tensor<T>::element_count(tail);
  std::vector<T> data(t.raw() + offset, t.raw() + offset + n);
  return Tensor<T>(std::move(tail), std::move(data));
}

template <Real T>
void set_subtensor(Tensor<T>& t, std::initializer_list<std::size_t> lead,
                   const Tensor<T>& block) {
  auto [offset, tail] = locate_block(t.shape(), lead);
  require_same_shape(tail, block.shape(), "set_subtensor");
  std::copy(block.raw(), block.raw() + block.size(), t.raw() + offset);
}

#define FLASHMHF_INSTANTIATE_OPS(T)                                        \
  template Tensor<T> matmul(const Tensor<T>&, const Tensor<T>&);           \
  template Tensor<T> matmul_nt(const Tensor<T>&, const Tensor<T>&);        \
  template Tensor<T> matmul_tn(const Tensor<T>&, const Tensor<T>&);        \
  template Tensor<T> transpose2d(const Tensor<T>&);                        \
  template Tensor<T> add(const Tensor<T>&, const Tensor<T>&);              \
  template Tensor<T> add(const Tensor<T>&, T);                             \
  template Tensor<T> sub(const Tensor<T>&, const Tensor<T>&);              \
  template Tensor<T> mul(const Tensor<T>&, const Tensor<T>&);              \
  template Tensor<T> scale(const Tensor<T>&, T);                           \
  template void accumulate(Tensor<T>&, const Tensor<T>&);                  \
  template double sum(const Tensor<T>&);                                   \
  template double max_abs_diff(const Tensor<T>&, const Tensor<T>&);        \
  template double max_rel_error(const Tensor<T>&, const Tensor<T>&);       \
  template bool all_finite(const Tensor<T>&);                              \
  template Tensor<T> subtensor(const Tensor<T>&,                           \
                               std::initializer_list<std::size_t>);        \
  template void set_subtensor(Tensor<T>&, std::initializer_list<std::size_t>, \
                              const Tensor<T>&);

FLASHMHF_INSTANTIATE_OPS(float)
FLASHMHF_INSTANTIATE_OPS(double)

#undef FLASHMHF_INSTANTIATE_OPS

}  // namespace flashmhf
