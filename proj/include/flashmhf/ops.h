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

#include <initializer_list>

#include "flashmhf/tensor.h"

namespace flashmhf {

// c = a·b. Products are accumulated in double regardless of T.
template <Real T>
Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b);

// c = a·bᵀ, without materializing the transpose.
template <Real T>
Tensor<T> matmul_nt(const Tensor<T>& a, const Tensor<T>& b);

// c = aᵀ·b.
template <Real T>
Tensor<T> matmul_tn(const Tensor<T>& a, const Tensor<T>& b);

template <Real T>
Tensor<T> transpose2d(const Tensor<T>& a);

template <Real T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b);
template <Real T>
Tensor<T> add(const Tensor<T>& a, T scalar);
template <Real T>
Tensor<T> sub(const Tensor<T>& a, const Tensor<T>& b);
template <Real T>
Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b);
template <Real T>
Tensor<T> scale(const Tensor<T>& a, T factor);

// dst += src, in place.
template <Real T>
void accumulate(Tensor<T>& dst, const Tensor<T>& src);

template <Real T>
double sum(const Tensor<T>& a);

template <Real T>
double max_abs_diff(const Tensor<T>& a, const Tensor<T>& b);

// max_i |a_i - b_i| / max(1, |a_i|, |b_i|)
template <Real T>
double max_rel_error(const Tensor<T>& a, const Tensor<T>& b);

template <Real T>
bool all_finite(const Tensor<T>& a);

// Fixes the leading indices of `t` and copies out the remaining trailing
// block, e.g. subtensor(K, {h, e}) on [H × E × d_e × d_h] yields d_e × d_h.
template <Real T>
Tensor<T> subtensor(const Tensor<T>& t, std::initializer_list<std::size_t> lead);

template <Real T>
void set_subtensor(Tensor<T>& t, std::initializer_list<std::size_t> lead,
                   const Tensor<T>& block);

// Throws DimensionError naming both shapes unless they are equal.
void require_same_shape(const Shape& a, const Shape& b, const char* what);
void require_rank(const Shape& s, std::size_t rank, const char* what);

}  // namespace flashmhf
