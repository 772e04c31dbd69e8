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

#include "flashmhf/kernel.h"

#include <algorithm>
#include <vector>

#include "flashmhf/ffn_reference.h"
#include "flashmhf/ops.h"

namespace flashmhf {

namespace {

struct KernelShape {
  std::size_t L, H, E, d_e, d_h;
};

template <Real T>
KernelShape check_shapes(const Tensor<T>& q, const Tensor<T>& k,
                         const Tensor<T>& u, const Tensor<T>& v,
                         const Tensor<T>& r, const TileSpec& tiles) {
  tiles.validate();
  require_rank(q.shape(), 3, "sramffn Q");
  require_rank(k.shape(), 4, "sramffn K");
  require_same_shape(k.shape(), u.shape(), "sramffn K/U");
  require_same_shape(k.shape(), v.shape(), "sramffn K/V");
  const KernelShape s{q.extent(0), q.extent(1), k.extent(1), k.extent(2),
                      q.extent(2)};
  if (k.extent(0) != s.H || k.extent(3) != s.d_h) {
    throw DimensionError("sramffn: Q " + shape_string(q.shape()) +
                         " incompatible with K " + shape_string(k.shape()));
  }
  require_same_shape(r.shape(), Shape{s.L, s.H, s.E}, "sramffn R");
  return s;
}

// Row pointer into a [H × E × d_e × d_h] parameter tensor.
template <Real T>
const T* param_row(const Tensor<T>& t, const KernelShape& s, std::size_t h,
                   std::size_t e, std::size_t i) {
  return t.raw() + ((h * s.E + e) * s.d_e + i) * s.d_h;
}

// Loads rows [s0, s0 + rows) of head h from an [L × H × d] tensor into a
// dense rows × d double block.
template <Real T>
void load_rows(const Tensor<T>& t, std::size_t h, std::size_t s0,
               std::size_t rows, std::vector<double>& dst) {
  const std::size_t H = t.extent(1), d = t.extent(2);
  for (std::size_t r = 0; r < rows; ++r) {
    const T* src = t.raw() + ((s0 + r) * H + h) * d;
    std::copy(src, src + d, dst.begin() + r * d);
  }
}

template <Real T>
double dot(const double* a, const T* b, std::size_t n) {
  double acc = 0.0;
  for (std::size_t j = 0; j < n; ++j) acc += a[j] * double(b[j]);
  return acc;
}

}  // namespace

template <Real T>
Tensor<T> sramffn_forward(const Tensor<T>& q, const Tensor<T>& k,
                          const Tensor<T>& u, const Tensor<T>& v,
                          const Tensor<T>& r, const TileSpec& tiles,
                          MemoryLedger* ledger) {
  const KernelShape s = check_shapes(q, k, u, v, r, tiles);
  const std::size_t bs = tiles.block_seq, bi = tiles.block_inter;

  Tensor<T> out({s.L, s.H, s.d_h});
  LedgerBuffer out_slot(ledger, s.L * s.H * s.d_h, "sramffn.out");

  std::vector<double> q_blk(bs * s.d_h);
  std::vector<double> acc(bs * s.d_h);
  std::vector<double> m_tile(bs * bi);
  std::vector<double> n_tile(bs * bi);

  for (std::size_t h = 0; h < s.H; ++h) {
    for (std::size_t s0 = 0; s0 < s.L; s0 += bs) {
      const std::size_t rows = std::min(bs, s.L - s0);
      LedgerBuffer acc_slot(ledger, bs * s.d_h, "sramffn.acc");
      LedgerBuffer m_slot(ledger, bs * bi, "sramffn.M");
      LedgerBuffer n_slot(ledger, bs * bi, "sramffn.N");

      load_rows(q, h, s0, rows, q_blk);
      std::fill(acc.begin(), acc.end(), 0.0);

      for (std::size_t e = 0; e < s.E; ++e) {
        for (std::size_t m0 = 0; m0 < s.d_e; m0 += bi) {
          const std::size_t cols = std::min(bi, s.d_e - m0);
          for (std::size_t rr = 0; rr < rows; ++rr) {
            const double* qr = q_blk.data() + rr * s.d_h;
            const double gate = r(s0 + rr, h, e);
            for (std::size_t c = 0; c < cols; ++c) {
              const double mv = dot(qr, param_row(k, s, h, e, m0 + c), s.d_h);
              const double nv = dot(qr, param_row(u, s, h, e, m0 + c), s.d_h);
              m_tile[rr * bi + c] = mv;
              n_tile[rr * bi + c] = nv;
            }
            // A = SiLU(M) ⊙ N ⊙ R, written over M.
            for (std::size_t c = 0; c < cols; ++c) {
              m_tile[rr * bi + c] =
                  silu(m_tile[rr * bi + c]) * n_tile[rr * bi + c] * gate;
            }
            double* ar = acc.data() + rr * s.d_h;
            for (std::size_t c = 0; c < cols; ++c) {
              const double a = m_tile[rr * bi + c];
              const T* vr = param_row(v, s, h, e, m0 + c);
              for (std::size_t j = 0; j < s.d_h; ++j) ar[j] += a * double(vr[j]);
            }
          }
        }
      }
      for (std::size_t rr = 0; rr < rows; ++rr)
        for (std::size_t j = 0; j < s.d_h; ++j)
          out(s0 + rr, h, j) = static_cast<T>(acc[rr * s.d_h + j]);
    }
  }
  return out;
}

template <Real T>
QueryGateGrads<T> sramffn_backward_dq_dr(const Tensor<T>& q, const Tensor<T>& k,
                                         const Tensor<T>& u, const Tensor<T>& v,
                                         const Tensor<T>& r,
                                         const Tensor<T>& ds,
                                         const TileSpec& tiles,
                                         MemoryLedger* ledger) {
  const KernelShape s = check_shapes(q, k, u, v, r, tiles);
  require_same_shape(ds.shape(), q.shape(), "sramffn dS");
  const std::size_t bs = tiles.block_seq, bi = tiles.block_inter;

  QueryGateGrads<T> g{Tensor<T>({s.L, s.H, s.d_h}), Tensor<T>({s.L, s.H, s.E})};
  LedgerBuffer dq_slot(ledger, s.L * s.H * s.d_h, "bwd_dq_dr.dQ");
  LedgerBuffer dr_slot(ledger, s.L * s.H * s.E, "bwd_dq_dr.dR");

  std::vector<double> q_blk(bs * s.d_h), ds_blk(bs * s.d_h);
  std::vector<double> dq_acc(bs * s.d_h), dr_rows(bs);
  std::vector<double> m_tile(bs * bi), n_tile(bs * bi), da_tile(bs * bi);

  for (std::size_t h = 0; h < s.H; ++h) {
    for (std::size_t s0 = 0; s0 < s.L; s0 += bs) {
      const std::size_t rows = std::min(bs, s.L - s0);
      LedgerBuffer dq_acc_slot(ledger, bs * s.d_h, "bwd_dq_dr.dQ_acc");
      LedgerBuffer dr_rows_slot(ledger, bs, "bwd_dq_dr.dR_rows");
      LedgerBuffer m_slot(ledger, bs * bi, "bwd_dq_dr.M");
      LedgerBuffer n_slot(ledger, bs * bi, "bwd_dq_dr.N");
      LedgerBuffer da_slot(ledger, bs * bi, "bwd_dq_dr.dA");

      load_rows(q, h, s0, rows, q_blk);
      load_rows(ds, h, s0, rows, ds_blk);
      std::fill(dq_acc.begin(), dq_acc.end(), 0.0);

      for (std::size_t e = 0; e < s.E; ++e) {
        std::fill(dr_rows.begin(), dr_rows.end(), 0.0);
        for (std::size_t m0 = 0; m0 < s.d_e; m0 += bi) {
          const std::size_t cols = std::min(bi, s.d_e - m0);
          for (std::size_t rr = 0; rr < rows; ++rr) {
            const double* qr = q_blk.data() + rr * s.d_h;
            const double* dsr = ds_blk.data() + rr * s.d_h;
            const double gate = r(s0 + rr, h, e);
            double* dqr = dq_acc.data() + rr * s.d_h;
            for (std::size_t c = 0; c < cols; ++c) {
              const std::size_t i = rr * bi + c;
              m_tile[i] = dot(qr, param_row(k, s, h, e, m0 + c), s.d_h);
              n_tile[i] = dot(qr, param_row(u, s, h, e, m0 + c), s.d_h);
              da_tile[i] = dot(dsr, param_row(v, s, h, e, m0 + c), s.d_h);
            }
            for (std::size_t c = 0; c < cols; ++c) {
              const std::size_t i = rr * bi + c;
              const double mv = m_tile[i], nv = n_tile[i], da = da_tile[i];
              const double sm = silu(mv);
              dr_rows[rr] += da * sm * nv;
              // dM and dN overwrite M and N.
              m_tile[i] = da * gate * nv * dsilu(mv);
              n_tile[i] = da * sm * gate;
            }
            for (std::size_t c = 0; c < cols; ++c) {
              const double dm = m_tile[rr * bi + c];
              const double dn = n_tile[rr * bi + c];
              const T* kr = param_row(k, s, h, e, m0 + c);
              const T* ur = param_row(u, s, h, e, m0 + c);
              for (std::size_t j = 0; j < s.d_h; ++j)
                dqr[j] += dm * double(kr[j]) + dn * double(ur[j]);
            }
          }
        }
        for (std::size_t rr = 0; rr < rows; ++rr)
          g.dr(s0 + rr, h, e) = static_cast<T>(dr_rows[rr]);
      }
      for (std::size_t rr = 0; rr < rows; ++rr)
        for (std::size_t j = 0; j < s.d_h; ++j)
          g.dq(s0 + rr, h, j) = static_cast<T>(dq_acc[rr * s.d_h + j]);
    }
  }
  return g;
}

template <Real T>
SubnetGrads<T> sramffn_backward_dkuv(const Tensor<T>& q, const Tensor<T>& k,
                                     const Tensor<T>& u, const Tensor<T>& v,
                                     const Tensor<T>& r, const Tensor<T>& ds,
                                     const TileSpec& tiles,
                                     MemoryLedger* ledger) {
  const KernelShape s = check_shapes(q, k, u, v, r, tiles);
  require_same_shape(ds.shape(), q.shape(), "sramffn dS");
  const std::size_t bs = tiles.block_seq, bi = tiles.block_inter;

  SubnetGrads<T> g{Tensor<T>(k.shape()), Tensor<T>(k.shape()),
                   Tensor<T>(k.shape())};

  std::vector<double> q_blk(bs * s.d_h), ds_blk(bs * s.d_h);
  std::vector<double> dk_acc(bi * s.d_h), du_acc(bi * s.d_h), dv_acc(bi * s.d_h);
  std::vector<double> m_tile(bs * bi), n_tile(bs * bi), da_tile(bs * bi);

  for (std::size_t h = 0; h < s.H; ++h) {
    for (std::size_t e = 0; e < s.E; ++e) {
      for (std::size_t m0 = 0; m0 < s.d_e; m0 += bi) {
        const std::size_t cols = std::min(bi, s.d_e - m0);
        LedgerBuffer dk_slot(ledger, bi * s.d_h, "bwd_dkuv.dK_acc");
        LedgerBuffer du_slot(ledger, bi * s.d_h, "bwd_dkuv.dU_acc");
        LedgerBuffer dv_slot(ledger, bi * s.d_h, "bwd_dkuv.dV_acc");
        LedgerBuffer m_slot(ledger, bs * bi, "bwd_dkuv.M");
        LedgerBuffer n_slot(ledger, bs * bi, "bwd_dkuv.N");
        LedgerBuffer da_slot(ledger, bs * bi, "bwd_dkuv.dA");
        std::fill(dk_acc.begin(), dk_acc.end(), 0.0);
        std::fill(du_acc.begin(), du_acc.end(), 0.0);
        std::fill(dv_acc.begin(), dv_acc.end(), 0.0);

        for (std::size_t s0 = 0; s0 < s.L; s0 += bs) {
          const std::size_t rows = std::min(bs, s.L - s0);
          load_rows(q, h, s0, rows, q_blk);
          load_rows(ds, h, s0, rows, ds_blk);
          for (std::size_t rr = 0; rr < rows; ++rr) {
            const double* qr = q_blk.data() + rr * s.d_h;
            const double* dsr = ds_blk.data() + rr * s.d_h;
            const double gate = r(s0 + rr, h, e);
            for (std::size_t c = 0; c < cols; ++c) {
              const std::size_t i = rr * bi + c;
              const double mv = dot(qr, param_row(k, s, h, e, m0 + c), s.d_h);
              const double nv = dot(qr, param_row(u, s, h, e, m0 + c), s.d_h);
              const double da = dot(dsr, param_row(v, s, h, e, m0 + c), s.d_h);
              const double sm = silu(mv);
              const double n_gated = gate * nv;
              // A, dM, dN stored over dA, M, N.
              da_tile[i] = sm * n_gated;
              m_tile[i] = da * n_gated * dsilu(mv);
              n_tile[i] = da * sm * gate;
            }
            for (std::size_t c = 0; c < cols; ++c) {
              const std::size_t i = rr * bi + c;
              const double a = da_tile[i], dm = m_tile[i], dn = n_tile[i];
              double* dkr = dk_acc.data() + c * s.d_h;
              double* dur = du_acc.data() + c * s.d_h;
              double* dvr = dv_acc.data() + c * s.d_h;
              for (std::size_t j = 0; j < s.d_h; ++j) {
                dvr[j] += a * dsr[j];
                dkr[j] += dm * qr[j];
                dur[j] += dn * qr[j];
              }
            }
          }
        }
        for (std::size_t c = 0; c < cols; ++c) {
          for (std::size_t j = 0; j < s.d_h; ++j) {
            g.dk(h, e, m0 + c, j) = static_cast<T>(dk_acc[c * s.d_h + j]);
            g.du(h, e, m0 + c, j) = static_cast<T>(du_acc[c * s.d_h + j]);
            g.dv(h, e, m0 + c, j) = static_cast<T>(dv_acc[c * s.d_h + j]);
          }
        }
      }
    }
  }
  return g;
}

#define FLASHMHF_INSTANTIATE_KERNEL(T)                                         \
  template Tensor<T> sramffn_forward(const Tensor<T>&, const Tensor<T>&,       \
                                     const Tensor<T>&, const Tensor<T>&,       \
                                     const Tensor<T>&, const TileSpec&,        \
                                     MemoryLedger*);                           \
  template QueryGateGrads<T> sramffn_backward_dq_dr(                           \
      const Tensor<T>&, const Tensor<T>&, const Tensor<T>&, const Tensor<T>&,  \
      const Tensor<T>&, const Tensor<T>&, const TileSpec&, MemoryLedger*);     \
  template SubnetGrads<T> sramffn_backward_dkuv(                               \
      const Tensor<T>&, const Tensor<T>&, const Tensor<T>&, const Tensor<T>&,  \
      const Tensor<T>&, const Tensor<T>&, const TileSpec&, MemoryLedger*);

FLASHMHF_INSTANTIATE_KERNEL(float)
FLASHMHF_INSTANTIATE_KERNEL(double)

#undef FLASHMHF_INSTANTIATE_KERNEL

}  // namespace flashmhf
