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

#include "flashmhf/ffn_reference.h"

#include <algorithm>

#include "flashmhf/ops.h"

namespace flashmhf {

namespace {

template <Real T, typename F>
Tensor<T> map(const Tensor<T>& x, F f) {
  Tensor<T> y(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = static_cast<T>(f(x[i]));
  return y;
}

double apply(Nonlinearity phi, double x) {
  switch (phi) {
    case Nonlinearity::kRelu:
      return x > 0.0 ? x : 0.0;
    case Nonlinearity::kGelu:
      return 0.5 * x * (1.0 + std::erf(x / std::sqrt(2.0)));
    case Nonlinearity::kSilu:
      return silu(x);
  }
  return x;
}

}  // namespace

template <Real T>
Tensor<T> silu(const Tensor<T>& x) {
  return map(x, [](double v) { return silu(v); });
}

template <Real T>
Tensor<T> dsilu(const Tensor<T>& x) {
  return map(x, [](double v) { return dsilu(v); });
}

template <Real T>
Tensor<T> dsilu_from_silu(const Tensor<T>& x) {
  return map(x, [](double v) { return dsilu_from_silu(v); });
}

template <Real T>
Tensor<T> vanilla_ffn(const Tensor<T>& x, const VanillaFFNParams<T>& p) {
  require_same_shape(p.w1.shape(), p.w2.shape(), "vanilla_ffn weights");
  const Tensor<T> h = matmul_nt(x, p.w1);
  const Tensor<T> a = map(h, [&](double v) { return apply(p.phi, v); });
  return matmul(a, p.w2);
}

template <Real T>
Tensor<T> swiglu_forward(const Tensor<T>& x, const SwiGLUParams<T>& p,
                         MemoryLedger* ledger) {
  require_same_shape(p.w_up.shape(), p.w_gate.shape(), "swiglu up/gate");
  require_rank(p.w_down.shape(), 2, "swiglu down");
  if (p.w_down.extent(0) != p.w_up.extent(1) ||
      p.w_down.extent(1) != p.w_up.extent(0)) {
    throw DimensionError("swiglu: down projection " +
                         shape_string(p.w_down.shape()) +
                         " does not invert " + shape_string(p.w_up.shape()));
  }
  const std::size_t L = x.extent(0);
  const std::size_t d_model = p.w_down.extent(1);
  const std::size_t d_ff = p.w_up.extent(1);

  LedgerBuffer out_slot(ledger, L * d_model, "swiglu.out");
  LedgerBuffer gate_slot(ledger, L * d_ff, "swiglu.gate_preact");
  Tensor<T> gate = matmul(x, p.w_gate);
  LedgerBuffer up_slot(ledger, L * d_ff, "swiglu.up");
  Tensor<T> up = matmul(x, p.w_up);
  LedgerBuffer prod_slot(ledger, L * d_ff, "swiglu.product");
  Tensor<T> prod(gate.shape());
  for (std::size_t i = 0; i < prod.size(); ++i)
    prod[i] = static_cast<T>(double(up[i]) * silu(double(gate[i])));
  return matmul(prod, p.w_down);
}

template <Real T>
Tensor<T> ffn_tilde(const Tensor<T>& q, const Tensor<T>& k, const Tensor<T>& u,
                    const Tensor<T>& v) {
  require_same_shape(k.shape(), u.shape(), "ffn_tilde K/U");
  require_same_shape(k.shape(), v.shape(), "ffn_tilde K/V");
  require_rank(q.shape(), 2, "ffn_tilde Q");
  if (q.extent(1) != k.extent(1)) {
    throw DimensionError("ffn_tilde: query width " + shape_string(q.shape()) +
                         " vs key rows " + shape_string(k.shape()));
  }
  const Tensor<T> m = matmul_nt(q, k);
  const Tensor<T> n = matmul_nt(q, u);
  Tensor<T> a(m.shape());
  for (std::size_t i = 0; i < a.size(); ++i)
    a[i] = static_cast<T>(silu(double(m[i])) * double(n[i]));
  return matmul(a, v);
}

template <Real T>
Tensor<T> softmax_rows(const Tensor<T>& logits) {
  require_rank(logits.shape(), 2, "softmax_rows");
  const std::size_t rows = logits.extent(0), cols = logits.extent(1);
  Tensor<T> out(logits.shape());
  std::vector<double> e(cols);
  for (std::size_t i = 0; i < rows; ++i) {
    double mx = logits(i, 0);
    for (std::size_t j = 1; j < cols; ++j) mx = std::max(mx, double(logits(i, j)));
    double z = 0.0;
    for (std::size_t j = 0; j < cols; ++j) {
      e[j] = std::exp(double(logits(i, j)) - mx);
      z += e[j];
    }
    for (std::size_t j = 0; j < cols; ++j) out(i, j) = static_cast<T>(e[j] / z);
  }
  return out;
}

template <Real T>
Tensor<T> pkv_forward(const Tensor<T>& q, const PKVParams<T>& p) {
  require_same_shape(p.k.shape(), p.v.shape(), "pkv K/V");
  require_rank(q.shape(), 2, "pkv Q");
  if (q.extent(1) != p.k.extent(1)) {
    throw DimensionError("pkv: query " + shape_string(q.shape()) +
                         " vs keys " + shape_string(p.k.shape()));
  }
  const T inv_sqrt = static_cast<T>(1.0 / std::sqrt(double(q.extent(1))));
  const Tensor<T> weights = softmax_rows(scale(matmul_nt(q, p.k), inv_sqrt));
  return matmul(weights, p.v);
}

#define FLASHMHF_INSTANTIATE_REF(T)                                           \
  template Tensor<T> silu(const Tensor<T>&);                                  \
  template Tensor<T> dsilu(const Tensor<T>&);                                 \
  template Tensor<T> dsilu_from_silu(const Tensor<T>&);                       \
  template Tensor<T> vanilla_ffn(const Tensor<T>&, const VanillaFFNParams<T>&); \
  template Tensor<T> swiglu_forward(const Tensor<T>&, const SwiGLUParams<T>&, \
                                    MemoryLedger*);                           \
  template Tensor<T> ffn_tilde(const Tensor<T>&, const Tensor<T>&,            \
                               const Tensor<T>&, const Tensor<T>&);           \
  template Tensor<T> softmax_rows(const Tensor<T>&);                          \
  template Tensor<T> pkv_forward(const Tensor<T>&, const PKVParams<T>&);

FLASHMHF_INSTANTIATE_REF(float)
FLASHMHF_INSTANTIATE_REF(double)

#undef FLASHMHF_INSTANTIATE_REF

}  // namespace flashmhf
