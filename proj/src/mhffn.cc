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

#include "flashmhf/mhffn.h"

#include <vector>

#include "flashmhf/ffn_reference.h"
#include "flashmhf/ops.h"

namespace flashmhf {

template <Real T>
Tensor<T> mhffn_forward(const Tensor<T>& x, const NaiveMHFFNParams<T>& p,
                        MemoryLedger* ledger) {
  require_rank(p.k.shape(), 3, "mhffn K");
  require_same_shape(p.k.shape(), p.u.shape(), "mhffn K/U");
  require_same_shape(p.k.shape(), p.v.shape(), "mhffn K/V");
  const HeadLayout layout = p.layout();
  const std::size_t d_model = layout.d_model();
  require_same_shape(p.w_in.shape(), Shape{d_model, d_model}, "mhffn W_in");
  require_same_shape(p.w_out.shape(), Shape{d_model, d_model}, "mhffn W_out");
  require_rank(x.shape(), 2, "mhffn X");
  if (x.extent(1) != d_model) {
    throw DimensionError("mhffn: input " + shape_string(x.shape()) +
                         " vs d_model " + std::to_string(d_model));
  }
  const std::size_t L = x.extent(0);
  const std::size_t d_ff = p.d_ff();

  const Tensor<T> q = split_heads(matmul(x, p.w_in), layout);
  Tensor<T> s({L, layout.H, layout.d_h});
  LedgerBuffer out_slot(ledger, L * d_model, "mhffn.out");

  std::vector<Tensor<T>> products;
  std::vector<LedgerBuffer> product_slots;
  products.reserve(layout.H);
  product_slots.reserve(layout.H);
  for (std::size_t h = 0; h < layout.H; ++h) {
    const Tensor<T> qh = head_slice(q, h);
    LedgerBuffer gate_slot(ledger, L * d_ff, "mhffn.gate_preact");
    const Tensor<T> gate = matmul_nt(qh, subtensor(p.k, {h}));
    LedgerBuffer up_slot(ledger, L * d_ff, "mhffn.up");
    const Tensor<T> up = matmul_nt(qh, subtensor(p.u, {h}));
    product_slots.emplace_back(ledger, L * d_ff, "mhffn.product");
    Tensor<T> a(gate.shape());
    for (std::size_t i = 0; i < a.size(); ++i)
      a[i] = static_cast<T>(silu(double(gate[i])) * double(up[i]));
    products.push_back(std::move(a));
  }
  for (std::size_t h = 0; h < layout.H; ++h) {
    set_head_slice(s, h, matmul(products[h], subtensor(p.v, {h})));
  }
  product_slots.clear();
  return matmul(concat_heads(s), p.w_out);
}

std::size_t mhffn_activation_count(std::size_t L, std::size_t H,
                                   std::size_t d_ff, std::size_t d_model) {
  return (L * H + d_model) * d_ff;
}

std::size_t mhffn_activation_count_token_major(std::size_t L, std::size_t H,
                                               std::size_t d_ff,
                                               std::size_t d_model) {
  return (d_ff * H + d_model) * L;
}

template Tensor<float> mhffn_forward(const Tensor<float>&,
                                     const NaiveMHFFNParams<float>&,
                                     MemoryLedger*);
template Tensor<double> mhffn_forward(const Tensor<double>&,
                                      const NaiveMHFFNParams<double>&,
                                      MemoryLedger*);

}  // namespace flashmhf
