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

#include "flashmhf/ledger.h"
#include "flashmhf/tensor.h"
#include "flashmhf/tiles.h"

namespace flashmhf {

// Blockwise sub-network mixture.
//
//   q: L × H × d_h    k, u, v: H × E × d_e × d_h    r: L × H × E
//
// The grid has one cell per (head, sequence block). Each cell keeps a
// block_seq × d_h accumulator and walks every sub-network e and every
// intermediate tile of that sub-network:
//
//   M = Q_blk K_tileᵀ,  N = Q_blk U_tileᵀ,  A = SiLU(M) ⊙ N ⊙ R[:, e]
//   acc += A V_tile
//
// so no L × d_ff intermediate ever exists. Tiles past the end of the sequence
// or of a sub-network are masked. Accumulation is in double for both T.
// r must already be normalized; that is not checked.
template <Real T>
Tensor<T> sramffn_forward(const Tensor<T>& q, const Tensor<T>& k,
                          const Tensor<T>& u, const Tensor<T>& v,
                          const Tensor<T>& r, const TileSpec& tiles,
                          MemoryLedger* ledger = nullptr);

template <Real T>
struct QueryGateGrads {
  Tensor<T> dq;  // L × H × d_h
  Tensor<T> dr;  // L × H × E
};

// Gradients with respect to Q and R, one cell per (head, sequence block).
// M and N are recomputed from the saved inputs, never stored.
template <Real T>
QueryGateGrads<T> sramffn_backward_dq_dr(const Tensor<T>& q, const Tensor<T>& k,
                                         const Tensor<T>& u, const Tensor<T>& v,
                                         const Tensor<T>& r,
                                         const Tensor<T>& ds,
                                         const TileSpec& tiles,
                                         MemoryLedger* ledger = nullptr);

template <Real T>
struct SubnetGrads {
  Tensor<T> dk;  // H × E × d_e × d_h
  Tensor<T> du;
  Tensor<T> dv;
};

// Gradients with respect to K, U, V, one cell per (head, sub-network,
// intermediate tile), each cell sweeping all sequence blocks.
template <Real T>
SubnetGrads<T> sramffn_backward_dkuv(const Tensor<T>& q, const Tensor<T>& k,
                                     const Tensor<T>& u, const Tensor<T>& v,
                                     const Tensor<T>& r, const Tensor<T>& ds,
                                     const TileSpec& tiles,
                                     MemoryLedger* ledger = nullptr);

}  // namespace flashmhf
