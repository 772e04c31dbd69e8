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

#include "flashmhf/model.h"

#include <string>

#include "flashmhf/ffn_reference.h"
#include "flashmhf/ops.h"
#include "flashmhf/rng.h"
#include "flashmhf/tiles.h"

namespace flashmhf {

std::size_t subnet_dim(std::size_t d_h) {
  // (8/3)·d_h / 64 == 8·d_h / 192, kept in integers so the ceiling is exact.
  return ceil_div(8 * d_h, 192) * 64;
}

FlashDims FlashDims::with_sizing_rule(HeadLayout layout, std::size_t E,
                                      double eps) {
  FlashDims dims{layout, E, subnet_dim(layout.d_h), eps};
  dims.validate();
  return dims;
}

void FlashDims::validate() const {
  if (layout.H == 0 || layout.d_h == 0 || E == 0 || d_e == 0) {
    throw ConfigError("FlashDims extents must be positive (H=" +
                      std::to_string(layout.H) + " d_h=" +
                      std::to_string(layout.d_h) + " E=" + std::to_string(E) +
                      " d_e=" + std::to_string(d_e) + ")");
  }
  if (!(eps > 0.0)) {
    throw ConfigError("gate eps must be > 0, got " + std::to_string(eps));
  }
}

FlashDims make_dense_moe(std::size_t d_model, std::size_t E, std::size_t d_e,
                         double eps) {
  FlashDims dims{HeadLayout{1, d_model}, E, d_e ? d_e : subnet_dim(d_model),
                 eps};
  dims.validate();
  return dims;
}

template <Real T>
void FlashMHFParams<T>::check(const FlashDims& dims) const {
  const std::size_t dm = dims.d_model();
  const Shape kuv{dims.H(), dims.E, dims.d_e, dims.d_h()};
  require_same_shape(w_in.shape(), Shape{dm, dm}, "W_in");
  require_same_shape(w_out.shape(), Shape{dm, dm}, "W_out");
  require_same_shape(k.shape(), kuv, "K");
  require_same_shape(u.shape(), kuv, "U");
  require_same_shape(v.shape(), kuv, "V");
  require_same_shape(w_gate.shape(), Shape{dims.H(), dims.d_h(), dims.E},
                     "W_gate");
}

template <Real T>
FlashMHFParams<T> zero_params(const FlashDims& dims) {
  const std::size_t dm = dims.d_model();
  const Shape kuv{dims.H(), dims.E, dims.d_e, dims.d_h()};
  return {Tensor<T>({dm, dm}),
          Tensor<T>(kuv),
          Tensor<T>(kuv),
          Tensor<T>(kuv),
          Tensor<T>({dims.H(), dims.d_h(), dims.E}),
          Tensor<T>({dm, dm})};
}

FlashMHFParams<double> init_params(const FlashDims& dims, std::uint64_t seed,
                                   double stddev) {
  dims.validate();
  const std::size_t dm = dims.d_model();
  const Shape kuv{dims.H(), dims.E, dims.d_e, dims.d_h()};
  return {normal_tensor({dm, dm}, 0.0, stddev, seed, "flashmhf.w_in"),
          normal_tensor(kuv, 0.0, stddev, seed, "flashmhf.k"),
          normal_tensor(kuv, 0.0, stddev, seed, "flashmhf.u"),
          normal_tensor(kuv, 0.0, stddev, seed, "flashmhf.v"),
          normal_tensor({dims.H(), dims.d_h(), dims.E}, 0.0, stddev, seed,
                        "flashmhf.w_gate"),
          normal_tensor({dm, dm}, 0.0, stddev, seed, "flashmhf.w_out")};
}

template <Real T>
GateOutput<T> gate_forward(const Tensor<T>& q, const Tensor<T>& w_gate,
                           double eps) {
  if (!(eps > 0.0)) {
    throw ConfigError("gate eps must be > 0, got " + std::to_string(eps));
  }
  require_rank(q.shape(), 3, "gate Q");
  require_rank(w_gate.shape(), 3, "gate W");
  const std::size_t L = q.extent(0), H = q.extent(1), d_h = q.extent(2);
  const std::size_t E = w_gate.extent(2);
  require_same_shape(w_gate.shape(), Shape{H, d_h, E}, "gate W");

  GateOutput<T> out{Tensor<T>({L, H, E}), Tensor<T>({L, H, E})};
  std::vector<double> sig(E);
  for (std::size_t l = 0; l < L; ++l) {
    for (std::size_t h = 0; h < H; ++h) {
      double total = 0.0;
      for (std::size_t e = 0; e < E; ++e) {
        double p = 0.0;
        for (std::size_t j = 0; j < d_h; ++j)
          p += double(q(l, h, j)) * double(w_gate(h, j, e));
        out.logits(l, h, e) = static_cast<T>(p);
        sig[e] = sigmoid(double(out.logits(l, h, e)));
        total += sig[e];
      }
      const double denom = total + eps;
      for (std::size_t e = 0; e < E; ++e)
        out.weights(l, h, e) = static_cast<T>(sig[e] / denom);
    }
  }
  return out;
}

template <Real T>
Tensor<T> subnet_mixture_reference(const Tensor<T>& q, const Tensor<T>& k,
                                   const Tensor<T>& u, const Tensor<T>& v,
                                   const Tensor<T>& r) {
  require_rank(q.shape(), 3, "mixture Q");
  require_rank(k.shape(), 4, "mixture K");
  require_same_shape(k.shape(), u.shape(), "mixture K/U");
  require_same_shape(k.shape(), v.shape(), "mixture K/V");
  const std::size_t L = q.extent(0), H = q.extent(1), d_h = q.extent(2);
  const std::size_t E = k.extent(1);
  if (k.extent(0) != H || k.extent(3) != d_h) {
    throw DimensionError("mixture: Q " + shape_string(q.shape()) + " vs K " +
                         shape_string(k.shape()));
  }
  require_same_shape(r.shape(), Shape{L, H, E}, "mixture R");

  Tensor<T> s({L, H, d_h});
  for (std::size_t h = 0; h < H; ++h) {
    const Tensor<T> qh = head_slice(q, h);
    for (std::size_t e = 0; e < E; ++e) {
      const Tensor<T> y = ffn_tilde(qh, subtensor(k, {h, e}),
                                    subtensor(u, {h, e}), subtensor(v, {h, e}));
      for (std::size_t l = 0; l < L; ++l) {
        const double w = r(l, h, e);
        for (std::size_t j = 0; j < d_h; ++j)
          s(l, h, j) = static_cast<T>(double(s(l, h, j)) + w * double(y(l, j)));
      }
    }
  }
  return s;
}

template <Real T>
Tensor<T> flashmhf_forward_reference(const Tensor<T>& x,
                                     const FlashMHFParams<T>& params,
                                     const FlashDims& dims,
                                     const Tensor<T>* gate_override) {
  dims.validate();
  params.check(dims);
  require_rank(x.shape(), 2, "flashmhf X");
  if (x.extent(1) != dims.d_model()) {
    throw DimensionError("flashmhf: input " + shape_string(x.shape()) +
                         " vs d_model " + std::to_string(dims.d_model()));
  }
  const Tensor<T> q = split_heads(matmul(x, params.w_in), dims.layout);
  Tensor<T> r;
  if (gate_override) {
    require_same_shape(gate_override->shape(),
                       Shape{x.extent(0), dims.H(), dims.E}, "gate override");
    r = *gate_override;
  } else {
    r = gate_forward(q, params.w_gate, dims.eps).weights;
  }
  const Tensor<T> s = subnet_mixture_reference(q, params.k, params.u, params.v, r);
  return matmul(concat_heads(s), params.w_out);
}

#define FLASHMHF_INSTANTIATE_MODEL(T)                                          \
  template struct FlashMHFParams<T>;                                           \
  template FlashMHFParams<T> zero_params(const FlashDims&);                    \
  template GateOutput<T> gate_forward(const Tensor<T>&, const Tensor<T>&,      \
                                      double);                                 \
  template Tensor<T> subnet_mixture_reference(                                 \
      const Tensor<T>&, const Tensor<T>&, const Tensor<T>&, const Tensor<T>&,  \
      const Tensor<T>&);                                                       \
  template Tensor<T> flashmhf_forward_reference(                               \
      const Tensor<T>&, const FlashMHFParams<T>&, const FlashDims&,            \
      const Tensor<T>*);

FLASHMHF_INSTANTIATE_MODEL(float)
FLASHMHF_INSTANTIATE_MODEL(double)

#undef FLASHMHF_INSTANTIATE_MODEL

}  // namespace flashmhf
