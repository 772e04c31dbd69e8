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

#include <cstddef>

#include "flashmhf/tensor.h"

namespace flashmhf {

struct HeadLayout {
  std::size_t H = 1;
  std::size_t d_h = 1;

  std::size_t d_model() const { return H * d_h; }

  // Throws LayoutError unless d_model splits evenly into `heads`.
  static HeadLayout for_model(std::size_t d_model, std::size_t heads);

  bool operator==(const HeadLayout&) const = default;
};

// [L × d_model] -> [L × H × d_h]; out[l,h,j] = t[l, h·d_h + j].
template <Real T>
Tensor<T> split_heads(const Tensor<T>& t, const HeadLayout& layout);

// Inverse of split_heads.
template <Real T>
Tensor<T> concat_heads(const Tensor<T>& s);

// Copies head h of an [L × H × d] tensor into an L × d matrix.
template <Real T>
Tensor<T> head_slice(const Tensor<T>& s, std::size_t h);

// Writes an L × d matrix into head h of an [L × H × d] tensor.
template <Real T>
void set_head_slice(Tensor<T>& s, std::size_t h, const Tensor<T>& slice);

}  // namespace flashmhf
