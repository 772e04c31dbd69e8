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

#include "flashmhf/bench/oracles.h"

#include <cmath>

namespace flashmhf::oracle {

namespace {

double sig(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace

TensorD matmul(const TensorD& a, const TensorD& b) {
  const std::size_t m = a.extent(0), k = a.extent(1), n = b.extent(1);
  TensorD c({m, n});
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      double s = 0.0;
      for (std::size_t t = 0; t < k; ++t) s += a(i, t) * b(t, j);
      c(i, j) = s;
    }
  return c;
}

TensorD split_heads(const TensorD& t, const HeadLayout& layout) {
  const std::size_t L = t.extent(0);
  TensorD out({L, layout.H, layout.d_h});
  for (std::size_t l1 = 1; l1 <= L; ++l1)
    for (std::size_t h1 = 1; h1 <= layout.H; ++h1)
      for (std::size_t j1 = 1; j1 <= layout.d_h; ++j1)
        out(l1 - 1, h1 - 1, j1 - 1) =
            t(l1 - 1, (h1 - 1) * layout.d_h + j1 - 1);
  return out;
}

TensorD swiglu(const TensorD& x, const SwiGLUParams<double>& p) {
  const std::size_t L = x.extent(0), dm = x.extent(1), dff = p.w_up.extent(1);
  TensorD out({L, dm});
  for (std::size_t l = 0; l < L; ++l) {
    for (std::size_t f = 0; f < dff; ++f) {
      double g = 0.0, u = 0.0;
      for (std::size_t i = 0; i < dm; ++i) {
        g += x(l, i) * p.w_gate(i, f);
        u += x(l, i) * p.w_up(i, f);
      }
      const double a = u * g * sig(g);
      for (std::size_t o = 0; o < dm; ++o) out(l, o) += a * p.w_down(f, o);
    }
  }
  return out;
}

namespace {

// Shared loop nest: per (l, h) projects the head query, then sums
// weight(l, h, e) · SiLU(q·k_f) (q·u_f) v_f over every sub-network row f.
template <typename Weight>
TensorD mixture(const TensorD& x, const TensorD& w_in, const TensorD& w_out,
                std::size_t H, std::size_t E, std::size_t rows, std::size_t d_h,
                const TensorD& k, const TensorD& u, const TensorD& v,
                const TensorD* w_gate, double eps, Weight weight) {
  const std::size_t L = x.extent(0), dm = H * d_h;
  TensorD concat({L, dm});
  std::vector<double> q(d_h);
  for (std::size_t l = 0; l < L; ++l) {
    for (std::size_t h = 0; h < H; ++h) {
      for (std::size_t j = 0; j < d_h; ++j) {
        double s = 0.0;
        for (std::size_t i = 0; i < dm; ++i) s += x(l, i) * w_in(i, h * d_h + j);
        q[j] = s;
      }
      std::vector<double> gates(E, 1.0);
      if (w_gate) {
        double total = 0.0;
        for (std::size_t e = 0; e < E; ++e) {
          double p = 0.0;
          for (std::size_t j = 0; j < d_h; ++j) p += q[j] * (*w_gate)(h, j, e);
          gates[e] = sig(p);
          total += gates[e];
        }
        for (auto& g : gates) g /= total + eps;
      }
      for (std::size_t e = 0; e < E; ++e) {
        const double w = weight(l, h, e, gates[e]);
        for (std::size_t f = 0; f < rows; ++f) {
          const std::size_t row = e * rows + f;
          double m = 0.0, n = 0.0;
          for (std::size_t j = 0; j < d_h; ++j) {
            m += q[j] * k[(h * E * rows + row) * d_h + j];
            n += q[j] * u[(h * E * rows + row) * d_h + j];
          }
          const double a = w * m * sig(m) * n;
          for (std::size_t j = 0; j < d_h; ++j)
            concat(l, h * d_h + j) += a * v[(h * E * rows + row) * d_h + j];
        }
      }
    }
  }
  TensorD out({L, dm});
  for (std::size_t l = 0; l < L; ++l)
    for (std::size_t o = 0; o < dm; ++o) {
      double s = 0.0;
      for (std::size_t i = 0; i < dm; ++i) s += concat(l, i) * w_out(i, o);
      out(l, o) = s;
    }
  return out;
}

}  // namespace

TensorD mhffn(const TensorD& x, const NaiveMHFFNParams<double>& p) {
  const std::size_t H = p.k.extent(0), dff = p.k.extent(1), d_h = p.k.extent(2);
  return mixture(x, p.w_in, p.w_out, H, 1, dff, d_h, p.k, p.u, p.v, nullptr,
                 0.0, [](std::size_t, std::size_t, std::size_t, double) {
                   return 1.0;
                 });
}

TensorD gate_weights(const TensorD& q, const TensorD& w_gate, double eps) {
  const std::size_t L = q.extent(0), H = q.extent(1), d_h = q.extent(2),
                    E = w_gate.extent(2);
  TensorD r({L, H, E});
  for (std::size_t l = 0; l < L; ++l)
    for (std::size_t h = 0; h < H; ++h) {
      double total = 0.0;
      for (std::size_t e = 0; e < E; ++e) {
        double p = 0.0;
        for (std::size_t j = 0; j < d_h; ++j) p += q(l, h, j) * w_gate(h, j, e);
        r(l, h, e) = sig(p);
        total += r(l, h, e);
      }
      for (std::size_t e = 0; e < E; ++e) r(l, h, e) /= total + eps;
    }
  return r;
}

TensorD flashmhf(const TensorD& x, const FlashMHFParams<double>& p,
                 const FlashDims& dims, const TensorD* gates) {
  if (gates) {
    return mixture(x, p.w_in, p.w_out, dims.H(), dims.E, dims.d_e, dims.d_h(),
                   p.k, p.u, p.v, nullptr, 0.0,
                   [&](std::size_t l, std::size_t h, std::size_t e, double) {
                     return (*gates)(l, h, e);
                   });
  }
  return mixture(x, p.w_in, p.w_out, dims.H(), dims.E, dims.d_e, dims.d_h(),
                 p.k, p.u, p.v, &p.w_gate, dims.eps,
                 [](std::size_t, std::size_t, std::size_t, double g) {
                   return g;
                 });
}

}  // namespace flashmhf::oracle
