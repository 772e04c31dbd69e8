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

#include <functional>

#include "flashmhf/ledger.h"
#include "flashmhf/model.h"
#include "flashmhf/tensor.h"
#include "flashmhf/tiles.h"

namespace flashmhf {

// Gradients of a scalar loss with respect to the input and every parameter
// of the module. Shapes mirror FlashMHFParams.
struct GradBundle {
  TensorD dx;      // L × d_model
  TensorD dw_in;   // d_model × d_model
  TensorD dw_out;  // d_model × d_model
  TensorD dk;      // H × E × d_e × d_h
  TensorD du;
  TensorD dv;
  TensorD dw_gate;  // H × d_h × E
};

// Everything the backward pass reads from the forward.
struct FlashForwardState {
  TensorD q;       // L × H × d_h
  TensorD logits;  // L × H × E (zero when the gate is overridden)
  TensorD gates;   // L × H × E
  TensorD s;       // L × H × d_h, pre-projection head outputs
  TensorD out;     // L × d_model
  bool gate_overridden = false;
};

// Backward of R = σ(P) / (Σ_e σ(P) + eps), row by row:
//   dP_f = σ_f(1 − σ_f)·[dR_f/(S + eps) − Σ_e dR_e σ_e/(S + eps)²].
TensorD gate_backward(const TensorD& logits, const TensorD& dr, double eps);

// Full module forward through the blockwise kernel.
template <Real T>
Tensor<T> flashmhf_forward(const Tensor<T>& x, const FlashMHFParams<T>& params,
                           const FlashDims& dims, const TileSpec& tiles = {},
                           MemoryLedger* ledger = nullptr,
                           const Tensor<T>* gate_override = nullptr);

FlashForwardState flashmhf_forward_state(const TensorD& x,
                                         const FlashMHFParams<double>& params,
                                         const FlashDims& dims,
                                         const TileSpec& tiles = {},
                                         const TensorD* gate_override = nullptr);

// Analytic backward given the upstream gradient d_out (L × d_model). With
// an overridden gate the R path is cut: dR is discarded and dW_gate is zero.
GradBundle flashmhf_backward(const TensorD& x,
                             const FlashMHFParams<double>& params,
                             const FlashDims& dims,
                             const FlashForwardState& state,
                             const TensorD& d_out, const TileSpec& tiles = {},
                             MemoryLedger* ledger = nullptr);

// Convenience overload that runs the forward itself.
GradBundle flashmhf_backward(const TensorD& x,
                             const FlashMHFParams<double>& params,
                             const FlashDims& dims, const TensorD& d_out,
                             const TileSpec& tiles = {},
                             const TensorD* gate_override = nullptr,
                             MemoryLedger* ledger = nullptr);

using TensorFn = std::function<TensorD(const TensorD&)>;

// Central differences of sum(fn(x)) with respect to every coordinate of
// `arg`. Throws NumericError naming the coordinate if fn yields a
// non-finite value.
TensorD finite_diff(const TensorFn& fn, const TensorD& arg, double h);

}  // namespace flashmhf
