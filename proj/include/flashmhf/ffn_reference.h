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

#include <atomic>
#include <cmath>

#include "flashmhf/ledger.h"
#include "flashmhf/tensor.h"

namespace flashmhf {

namespace fault {

// Test hook: when set, every dsilu evaluation is perturbed by +0.05 so that
// gradient checks have something to catch.
inline std::atomic<bool> g_corrupt_dsilu{false};

inline void set_dsilu_corruption(bool on) {
  g_corrupt_dsilu.store(on, std::memory_order_relaxed);
}

}  // namespace fault

inline double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

inline double silu(double x) { return x * sigmoid(x); }

inline double dsilu(double x) {
  const double s = sigmoid(x);
  const double d = s * (1.0 + x * (1.0 - s));
  if (fault::g_corrupt_dsilu.load(std::memory_order_relaxed)) return d + 0.05;
  return d;
}

// Same derivative written through the forward value: A + σ(M)·(1 − A) with
// A = SiLU(M).
inline double dsilu_from_silu(double x) {
  const double a = silu(x);
  return a + sigmoid(x) * (1.0 - a);
}

template <Real T>
Tensor<T> silu(const Tensor<T>& x);
template <Real T>
Tensor<T> dsilu(const Tensor<T>& x);
template <Real T>
Tensor<T> dsilu_from_silu(const Tensor<T>& x);

enum class Nonlinearity { kRelu, kGelu, kSilu };

template <Real T>
struct VanillaFFNParams {
  Tensor<T> w1;  // d_ff × d_model
  Tensor<T> w2;  // d_ff × d_model
  Nonlinearity phi = Nonlinearity::kSilu;
};

template <Real T>
struct SwiGLUParams {
  Tensor<T> w_up;    // d_model × d_ff
  Tensor<T> w_gate;  // d_model × d_ff
  Tensor<T> w_down;  // d_ff × d_model
};

// Parametric key/value attention over learned rows. The logit scale is
// 1/sqrt(d_h) and is derived from the key width.
template <Real T>
struct PKVParams {
  Tensor<T> k;  // d_ff × d_h
  Tensor<T> v;  // d_ff × d_h
};

// φ(X W1ᵀ) W2.
template <Real T>
Tensor<T> vanilla_ffn(const Tensor<T>& x, const VanillaFFNParams<T>& p);

// ((X W_up) ⊙ SiLU(X W_gate)) W_down. With a ledger attached, the output and
// the three L×d_ff intermediates are registered.
template <Real T>
Tensor<T> swiglu_forward(const Tensor<T>& x, const SwiGLUParams<T>& p,
                         MemoryLedger* ledger = nullptr);

// (SiLU(Q Kᵀ) ⊙ (Q Uᵀ)) V, the key/value rewriting of SwiGLU.
template <Real T>
Tensor<T> ffn_tilde(const Tensor<T>& q, const Tensor<T>& k, const Tensor<T>& u,
                    const Tensor<T>& v);

// Row-wise softmax with max subtraction.
template <Real T>
Tensor<T> softmax_rows(const Tensor<T>& logits);

// softmax(Q Kᵀ / sqrt(d_h)) V.
template <Real T>
Tensor<T> pkv_forward(const Tensor<T>& q, const PKVParams<T>& p);

}  // namespace flashmhf
