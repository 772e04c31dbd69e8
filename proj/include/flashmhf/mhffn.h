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

#include "flashmhf/heads.h"
#include "flashmhf/ledger.h"
#include "flashmhf/tensor.h"

namespace flashmhf {

// Naive multi-head FFN: every head owns a full d_ff-wide key/value set.
template <Real T>
struct NaiveMHFFNParams {
  Tensor<T> w_in;   // d_model × d_model
  Tensor<T> k;      // H × d_ff × d_h
  Tensor<T> u;      // H × d_ff × d_h
  Tensor<T> v;      // H × d_ff × d_h
  Tensor<T> w_out;  // d_model × d_model

  HeadLayout layout() const { return HeadLayout{k.extent(0), k.extent(2)}; }
  std::size_t d_ff() const { return k.extent(1); }
};

// concat_h(ffn_tilde(split_h(X W_in)[:,h,:]; K^h, U^h, V^h)) W_out.
//
// Ledger policy: the output slot is registered first; for each head the
// SiLU pre-activation and the up projection (L×d_ff each) are registered,
// combined into the product (L×d_ff), then released. All H products stay
// live until the batched V multiplication, after which they are released.
// Peak = naive_mhffn_peak_elements(L, H, d_model, d_ff).
template <Real T>
Tensor<T> mhffn_forward(const Tensor<T>& x, const NaiveMHFFNParams<T>& p,
                        MemoryLedger* ledger = nullptr);

// (L·H + d_model)·d_ff: the asymptotic activation footprint written with
// d_ff factored out.
std::size_t mhffn_activation_count(std::size_t L, std::size_t H,
                                   std::size_t d_ff, std::size_t d_model);

// (d_ff·H + d_model)·L: the same footprint written with L factored out. The
// two expressions disagree in the d_model cross term; both are reported.
std::size_t mhffn_activation_count_token_major(std::size_t L, std::size_t H,
                                               std::size_t d_ff,
                                               std::size_t d_model);

}  // namespace flashmhf
