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

#include <gtest/gtest.h>

#include <cmath>

#include "flashmhf/bench/oracles.h"
#include "flashmhf/errors.h"
#include "flashmhf/ffn_reference.h"
#include "flashmhf/model.h"
#include "flashmhf/ops.h"
#include "test_util.h"

namespace flashmhf {
namespace {

using testing::Dice;
using testing::randn;

TEST(SizingRule, EfficiencyTableSubnetWidth) {
  // d_e column of the efficiency table at d_h = 128.
  EXPECT_EQ(subnet_dim(128), 384u);
}

TEST(SizingRule, RoundsUpToMultipleOf64) {
  EXPECT_EQ(subnet_dim(64), 192u);   // 170.67 -> 192
  EXPECT_EQ(subnet_dim(256), 704u);  // 682.67 -> 704
  EXPECT_EQ(subnet_dim(1), 64u);
  for (std::size_t d_h = 1; d_h <= 300; ++d_h) {
    const std::size_t d = subnet_dim(d_h);
    EXPECT_EQ(d % 64, 0u);
    EXPECT_GE(3 * d, 8 * d_h);
    EXPECT_LT(3 * (d - 64), 8 * d_h);
  }
}

TEST(SizingRule, ImbalanceRatiosOfDenseConfigs) {
  // (d_ff, d_h) pairs of the 128M, 370M and 1.3B settings.
  EXPECT_EQ(2048 / 128, 16);
  EXPECT_EQ(2688 / 128, 21);
  EXPECT_EQ(5760 / 128, 45);
  EXPECT_EQ(2688 % 128, 0);
  EXPECT_EQ(5760 % 128, 0);
}

TEST(FlashDims, ValidateRejectsDegenerateConfigs) {
  FlashDims d{HeadLayout{2, 4}, 3, 8};
  EXPECT_NO_THROW(d.validate());
  d.eps = 0.0;
  EXPECT_THROW(d.validate(), ConfigError);
  d = FlashDims{HeadLayout{2, 4}, 0, 8};
  EXPECT_THROW(d.validate(), ConfigError);
}

TEST(FlashDims, SizingRuleAndDenseMoE) {
  const FlashDims d = FlashDims::with_sizing_rule(HeadLayout{16, 128}, 22);
  EXPECT_EQ(d.d_e, 384u);
  EXPECT_EQ(d.d_model(), 2048u);
  EXPECT_EQ(d.d_ff(), 22u * 384u);
  const FlashDims m = make_dense_moe(64, 4);
  EXPECT_EQ(m.H(), 1u);
  EXPECT_EQ(m.d_h(), 64u);
  EXPECT_EQ(m.d_e, 192u);
}

TEST(Params, ShapesCountsAndDeterministicInit) {
  const FlashDims d{HeadLayout{2, 3}, 4, 5};
  const auto p = init_params(d, 11);
  EXPECT_EQ(p.k.shape(), (Shape{2, 4, 5, 3}));
  EXPECT_EQ(p.w_gate.shape(), (Shape{2, 3, 4}));
  EXPECT_EQ(p.parameter_count(), 2u * 36 + 3u * 120 + 24);
  EXPECT_NO_THROW(p.check(d));
  const auto q = init_params(d, 11);
  EXPECT_EQ(p.k, q.k);
  EXPECT_FALSE(p.k == init_params(d, 12).k);
  EXPECT_FALSE(p.k == p.u);
  auto bad = p;
  bad.v = TensorD({2, 4, 5, 4});
  EXPECT_THROW(bad.check(d), DimensionError);
}

TEST(Params, DefaultInitHasInitializerRangeStd) {
  const FlashDims d{HeadLayout{4, 64}, 4, 128};
  const auto p = init_params(d, 11);
  double n = 0, s = 0, s2 = 0;
  for (const TensorD* t : {&p.w_in, &p.k, &p.u, &p.v, &p.w_gate, &p.w_out}) {
    for (double v : t->data()) {
      n += 1;
      s += v;
      s2 += v * v;
    }
  }
  ASSERT_GE(n, 1e5);
  const double mean = s / n;
  const double sd = std::sqrt(s2 / n - mean * mean);
  EXPECT_NEAR(mean, 0.0, 1e-3);
  EXPECT_GE(sd, 0.019);
  EXPECT_LE(sd, 0.021);
}

TEST(Gate, RowSumsAreSOverSPlusEps) {
  Dice dice(1, "gate");
  for (double eps : {1e-6, 0.25}) {
    for (int i = 0; i < 10; ++i) {
      const std::size_t L = dice(1, 6), H = dice(1, 3), d_h = dice(1, 4),
                        E = dice(1, 6);
      const TensorD q = randn({L, H, d_h}, i, "q");
      const TensorD w = randn({H, d_h, E}, i, "w", 3.0);
      const auto g = gate_forward(q, w, eps);
      EXPECT_LT(max_rel_error(g.weights, oracle::gate_weights(q, w, eps)), 1e-14);
      for (std::size_t l = 0; l < L; ++l)
        for (std::size_t h = 0; h < H; ++h) {
          double s = 0.0, r = 0.0;
          for (std::size_t e = 0; e < E; ++e) {
            s += sigmoid(g.logits(l, h, e));
            r += g.weights(l, h, e);
            EXPECT_GT(g.weights(l, h, e), 0.0);
          }
          EXPECT_NEAR(r, s / (s + eps), 1e-14);
        }
    }
  }
}

TEST(Gate, SingleSubnetIsNearOne) {
  const TensorD q = randn({3, 2, 4}, 2, "q");
  const auto g = gate_forward(q, randn({2, 4, 1}, 2, "w"), 1e-6);
  for (double r : g.weights.data()) EXPECT_NEAR(r, 1.0, 1e-5);
}

TEST(Reference, MatchesLoopOracle) {
  Dice dice(3, "ref");
  for (int i = 0; i < 10; ++i) {
    const FlashDims d{HeadLayout{dice(1, 3), dice(1, 4)}, dice(1, 3), dice(1, 6)};
    const auto p = init_params(d, i, 0.5);
    const TensorD x = randn({dice(1, 6), d.d_model()}, i, "x");
    EXPECT_LT(max_rel_error(flashmhf_forward_reference(x, p, d),
                            oracle::flashmhf(x, p, d)),
              1e-13);
  }
}

TEST(Reference, UniformGateIsScaledConcatenatedFFN) {
  const FlashDims d{HeadLayout{1, 4}, 3, 5};
  const auto p = init_params(d, 5, 0.5);
  const TensorD q = randn({6, 1, 4}, 5, "q");
  const TensorD r = TensorD::full({6, 1, 3}, 1.0 / 3);
  const TensorD s = subnet_mixture_reference(q, p.k, p.u, p.v, r);
  const Shape cat{15, 4};
  const TensorD expect =
      scale(ffn_tilde(q.reshaped({6, 4}), p.k.reshaped(cat), p.u.reshaped(cat),
                      p.v.reshaped(cat)),
            1.0 / 3);
  EXPECT_LT(max_rel_error(s.reshaped({6, 4}), expect), 1e-14);
}

}  // namespace
}  // namespace flashmhf
