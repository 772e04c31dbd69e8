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

#include "flashmhf/heads.h"

#include <algorithm>
#include <string>

#include "flashmhf/ops.h"

namespace flashmhf {

HeadLayout HeadLayout::for_model(std::size_t d_model, std::size_t heads) {
  if (heads == 0 || d_model == 0 || d_model % heads != 0) {
    throw LayoutError("d_model " + std::to_string(d_model) +
                      " is not divisible into " + std::to_string(heads) +
                      " heads");
  }
  return HeadLayout{heads, d_model / heads};
}

template <Real T>
Tensor<T> split_heads(const Tensor<T>& t, const HeadLayout& layout) {
  require_rank(t.shape(), 2, "split_heads");
  if (t.extent(1) != layout.d_model()) {
    throw LayoutError("split_heads: width " + std::to_string(t.extent(1)) +
                      " != H·d_h = " + std::to_string(layout.H) + "·" +
                      std::to_string(layout.d_h));
  }
  // Row-major [L, H·d_h] and [L, H, d_h] share the same flat order.
  return t.reshaped({t.extent(0), layout.H, layout.d_h});
}

template <Real T>
Tensor<T> concat_heads(const Tensor<T>& s) {
  require_rank(s.shape(), 3, "concat_heads");
  return s.reshaped({s.extent(0), s.extent(1) * s.extent(2)});
}

template <Real T>
Tensor<T> head_slice(const Tensor<T>& s, std::size_t h) {
  require_rank(s.shape(), 3, "head_slice");
  const std::size_t L = s.extent(0), H = s.extent(1), d = s.extent(2);
  if (h >= H) throw LayoutError("head index out of range");
  Tensor<T> out({L, d});
  for (std::size_t l = 0; l < L; ++l) {
    const T* src = s.raw() + (l * H + h) * d;
    std::copy(src, src + d, out.raw() + l * d);
  }
  return out;
}

template <Real T>
void set_head_slice(Tensor<T>& s, std::size_t h, const Tensor<T>& slice) {
  require_rank(s.shape(), 3, "set_head_slice");
  const std::size_t L = s.extent(0), H = s.extent(1), d = s.extent(2);
  require_same_shape(slice.shape(), Shape{L, d}, "set_head_slice");
  if (h >= H) throw LayoutError("head index out of range");
  for (std::size_t l = 0; l < L; ++l) {
    const T* src = slice.raw() + l * d;
    std::copy(src, src + d, s.raw() + (l * H + h) * d);
  }
}

#define FLASHMHF_INSTANTIATE_HEADS(T)                                  \
  template Tensor<T> split_heads(const Tensor<T>&, const HeadLayout&); \
  template Tensor<T> concat_heads(const Tensor<T>&);                   \
  template Tensor<T> head_slice(const Tensor<T>&, std::size_t);        \
  template void set_head_slice(Tensor<T>&, std::size_t, const Tensor<T>&);

FLASHMHF_INSTANTIATE_HEADS(float)
FLASHMHF_INSTANTIATE_HEADS(double)

#undef FLASHMHF_INSTANTIATE_HEADS

}  // namespace flashmhf
