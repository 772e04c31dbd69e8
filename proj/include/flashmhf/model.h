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
#include <cstdint>

#include "flashmhf/heads.h"
#include "flashmhf/tensor.h"

namespace flashmhf {

inline constexpr double kDefaultGateEps = 1e-6;
inline constexpr double kInitializerRange = 0.02;

// ceil((8/3)·d_h / 64)·64: the SwiGLU expansion ratio applied per head,
// rounded up to a multiple of 64.
std::size_t subnet_dim(std::size_t d_h);

struct FlashDims {
  HeadLayout layout;
  std::size_t E = 1;
  std::size_t d_e = 1;
  double eps = kDefaultGateEps;

  std::size_t H() const { return layout.H; }
  std::size_t d_h() const { return layout.d_h; }
  std::size_t d_model() const { return layout.d_model(); }
  std::size_t d_ff() const { return E * d_e; }

  // d_e taken from subnet_dim(layout.d_h).
  static FlashDims with_sizing_rule(HeadLayout layout, std::size_t E,
                                    double eps = kDefaultGateEps);

  // Throws ConfigError for zero extents or eps <= 0.
  void validate() const;

  bool operator==(const FlashDims&) const = default;
};

// Single-head configuration: a dense gated mixture of E sub-networks over the
// whole model width. d_e defaults to subnet_dim(d_model).
FlashDims make_dense_moe(std::size_t d_model, std::size_t E,
                         std::size_t d_e = 0, double eps = kDefaultGateEps);

template <Real T>
struct FlashMHFParams {
  Tensor<T> w_in;    // d_model × d_model
  Tensor<T> k;       // H × E × d_e × d_h
  Tensor<T> u;       // H × E × d_e × d_h
  Tensor<T> v;       // H × E × d_e × d_h
  Tensor<T> w_gate;  // H × d_h × E
  Tensor<T> w_out;   // d_model × d_model

  template <Real U>
  FlashMHFParams<U> cast() const {
    return {w_in.template cast<U>(),   k.template cast<U>(),
            u.template cast<U>(),      v.template cast<U>(),
            w_gate.template cast<U>(), w_out.template cast<U>()};
  }

  // Throws DimensionError if any tensor disagrees with `dims`.
  void check(const FlashDims& dims) const;

  std::size_t parameter_count() const {
    return w_in.size() + k.size() + u.size() + v.size() + w_gate.size() +
           w_out.size();
  }
};

// Zero tensors with the shapes `dims` implies.
template <Real T>
FlashMHFParams<T> zero_params(const FlashDims& dims);

// Every weight i.i.d. normal(0, stddev), each tensor from its own
// (seed, role-tag) stream.
FlashMHFParams<double> init_params(const FlashDims& dims, std::uint64_t seed,
                                   double stddev = kInitializerRange);

template <Real T>
struct GateOutput {
  Tensor<T> logits;   // P: L × H × E
  Tensor<T> weights;  // R: L × H × E
};

// P[:,h,:] = Q[:,h,:]·W_gate[h];  R = σ(P) / (Σ_e σ(P) + eps) per (l, h).
template <Real T>
GateOutput<T> gate_forward(const Tensor<T>& q, const Tensor<T>& w_gate,
                           double eps);

// Per-head mixture S[l,h,:] = Σ_e R[l,h,e]·ffn_tilde(Q[l,h,:]; K_e^h, U_e^h,
// V_e^h), computed densely sub-network by sub-network.
template <Real T>
Tensor<T> subnet_mixture_reference(const Tensor<T>& q, const Tensor<T>& k,
                                   const Tensor<T>& u, const Tensor<T>& v,
                                   const Tensor<T>& r);

// Dense, materializing forward of the whole module. gate_override, when
// given, replaces the gate weights R (tests only).
template <Real T>
Tensor<T> flashmhf_forward_reference(const Tensor<T>& x,
                                     const FlashMHFParams<T>& params,
                                     const FlashDims& dims,
                                     const Tensor<T>* gate_override = nullptr);

}  // namespace flashmhf
