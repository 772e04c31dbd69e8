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

#include "flashmhf/grad.h"

#include <cmath>
#include <string>

#include "flashmhf/ffn_reference.h"
#include "flashmhf/heads.h"
#include "flashmhf/kernel.h"
#include "flashmhf/ops.h"

namespace flashmhf {

TensorD gate_backward(const TensorD& logits, const TensorD& dr, double eps) {
  require_same_shape(logits.shape(), dr.shape(), "gate_backward");
  require_rank(logits.shape(), 3, "gate_backward");
  const std::size_t L = logits.extent(0), H = logits.extent(1),
                    E = logits.extent(2);
  TensorD dp(logits.shape());
  std::vector<double> sig(E);
  for (std::size_t l = 0; l < L; ++l) {
    for (std::size_t h = 0; h < H; ++h) {
      double total = 0.0, weighted = 0.0;
      for (std::size_t e = 0; e < E; ++e) {
        sig[e] = sigmoid(logits(l, h, e));
        total += sig[e];
        weighted += dr(l, h, e) * sig[e];
      }
      const double denom = total + eps;
      const double shared = weighted / (denom * denom);
      for (std::size_t e = 0; e < E; ++e) {
        dp(l, h, e) =
            sig[e] * (1.0 - sig[e]) * (dr(l, h, e) / denom - shared);
      }
    }
  }
  return dp;
}

namespace {

template <Real T>
void check_input(const Tensor<T>& x, const FlashDims& dims) {
  require_rank(x.shape(), 2, "flashmhf X");
  if (x.extent(1) != dims.d_model()) {
    throw DimensionError("flashmhf: input " + shape_string(x.shape()) +
                         " vs d_model " + std::to_string(dims.d_model()));
  }
}

}  // namespace

template <Real T>
Tensor<T> flashmhf_forward(const Tensor<T>& x, const FlashMHFParams<T>& params,
                           const FlashDims& dims, const TileSpec& tiles,
                           MemoryLedger* ledger,
                           const Tensor<T>* gate_override) {
  dims.validate();
  params.check(dims);
  check_input(x, dims);
  const Tensor<T> q = split_heads(matmul(x, params.w_in), dims.layout);
  Tensor<T> r;
  if (gate_override) {
    require_same_shape(gate_override->shape(),
                       Shape{x.extent(0), dims.H(), dims.E}, "gate override");
    r = *gate_override;
  } else {
    r = gate_forward(q, params.w_gate, dims.eps).weights;
  }
  const Tensor<T> s =
      sramffn_forward(q, params.k, params.u, params.v, r, tiles, ledger);
  return matmul(concat_heads(s), params.w_out);
}

FlashForwardState flashmhf_forward_state(const TensorD& x,
                                         const FlashMHFParams<double>& params,
                                         const FlashDims& dims,
                                         const TileSpec& tiles,
                                         const TensorD* gate_override) {
  dims.validate();
  params.check(dims);
  check_input(x, dims);
  FlashForwardState st;
  st.q = split_heads(matmul(x, params.w_in), dims.layout);
  if (gate_override) {
    require_same_shape(gate_override->shape(),
                       Shape{x.extent(0), dims.H(), dims.E}, "gate override");
    st.logits = TensorD(gate_override->shape());
    st.gates = *gate_override;
    st.gate_overridden = true;
  } else {
    GateOutput<double> g = gate_forward(st.q, params.w_gate, dims.eps);
    st.logits = std::move(g.logits);
    st.gates = std::move(g.weights);
  }
  st.s = sramffn_forward(st.q, params.k, params.u, params.v, st.gates, tiles);
  st.out = matmul(concat_heads(st.s), params.w_out);
  return st;
}

GradBundle flashmhf_backward(const TensorD& x,
                             const FlashMHFParams<double>& params,
                             const FlashDims& dims,
                             const FlashForwardState& st, const TensorD& d_out,
                             const TileSpec& tiles, MemoryLedger* ledger) {
  require_same_shape(d_out.shape(), st.out.shape(), "flashmhf dO");
  const std::size_t L = x.extent(0), H = dims.H(), d_h = dims.d_h(),
                    E = dims.E;
  GradBundle g;

  const TensorD concat = concat_heads(st.s);
  g.dw_out = matmul_tn(concat, d_out);
  const TensorD ds = split_heads(matmul_nt(d_out, params.w_out), dims.layout);

  QueryGateGrads<double> qr = sramffn_backward_dq_dr(
      st.q, params.k, params.u, params.v, st.gates, ds, tiles, ledger);
  SubnetGrads<double> kuv = sramffn_backward_dkuv(
      st.q, params.k, params.u, params.v, st.gates, ds, tiles, ledger);
  g.dk = std::move(kuv.dk);
  g.du = std::move(kuv.du);
  g.dv = std::move(kuv.dv);

  TensorD dq = std::move(qr.dq);
  g.dw_gate = TensorD({H, d_h, E});
  if (!st.gate_overridden) {
    const TensorD dp = gate_backward(st.logits, qr.dr, dims.eps);
    for (std::size_t h = 0; h < H; ++h) {
      for (std::size_t l = 0; l < L; ++l) {
        for (std::size_t j = 0; j < d_h; ++j) {
          double acc = 0.0;
          for (std::size_t e = 0; e < E; ++e)
            acc += dp(l, h, e) * params.w_gate(h, j, e);
          dq(l, h, j) += acc;
        }
      }
      for (std::size_t j = 0; j < d_h; ++j) {
        for (std::size_t e = 0; e < E; ++e) {
          double acc = 0.0;
          for (std::size_t l = 0; l < L; ++l) acc += st.q(l, h, j) * dp(l, h, e);
          g.dw_gate(h, j, e) = acc;
        }
      }
    }
  }

  const TensorD dz = concat_heads(dq);
  g.dw_in = matmul_tn(x, dz);
  g.dx = matmul_nt(dz, params.w_in);
  return g;
}

GradBundle flashmhf_backward(const TensorD& x,
                             const FlashMHFParams<double>& params,
                             const FlashDims& dims, const TensorD& d_out,
                             const TileSpec& tiles,
                             const TensorD* gate_override,
                             MemoryLedger* ledger) {
  const FlashForwardState st =
      flashmhf_forward_state(x, params, dims, tiles, gate_override);
  return flashmhf_backward(x, params, dims, st, d_out, tiles, ledger);
}

TensorD finite_diff(const TensorFn& fn, const TensorD& arg, double h) {
  if (!(h > 0.0)) throw ConfigError("finite_diff step must be > 0");
  TensorD grad(arg.shape());
  TensorD probe = arg;
  for (std::size_t i = 0; i < arg.size(); ++i) {
    const double orig = probe[i];
    probe[i] = orig + h;
    const double plus = sum(fn(probe));
    probe[i] = orig - h;
    const double minus = sum(fn(probe));
    probe[i] = orig;
    if (!std::isfinite(plus) || !std::isfinite(minus)) {
      throw NumericError("finite_diff: non-finite value at coordinate " +
                         std::to_string(i));
    }
    grad[i] = (plus - minus) / (2.0 * h);
  }
  return grad;
}

template Tensor<float> flashmhf_forward(const Tensor<float>&,
                                        const FlashMHFParams<float>&,
                                        const FlashDims&, const TileSpec&,
                                        MemoryLedger*, const Tensor<float>*);
template Tensor<double> flashmhf_forward(const Tensor<double>&,
                                         const FlashMHFParams<double>&,
                                         const FlashDims&, const TileSpec&,
                                         MemoryLedger*, const Tensor<double>*);

}  // namespace flashmhf
