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
#include "flashmhf/ledger.h"
#include "flashmhf/ops.h"
#include "test_util.h"

namespace flashmhf {
namespace {

using testing::Dice;
using testing::randn;

TEST(Activations, KnownValues) {
  EXPECT_EQ(silu(0.0), 0.0);
  EXPECT_DOUBLE_EQ(dsilu(0.0), 0.5);
  EXPECT_DOUBLE_EQ(sigmoid(0.0), 0.5);
  EXPECT_NEAR(silu(1.0), 1.0 / (1.0 + std::exp(-1.0)), 1e-16);
}

TEST(Activations, SigmoidSaturatesWithoutOverflow) {
  EXPECT_EQ(sigmoid(1000.0), 1.0);
  EXPECT_EQ(sigmoid(-1000.0), 0.0);
  EXPECT_TRUE(std::isfinite(dsilu(-800.0)));
  EXPECT_TRUE(std::isfinite(dsilu(800.0)));
}

TEST(Activations, DerivativeFormsAgree) {
  for (double x = -10.0; x <= 10.0; x += 0.125) {
    EXPECT_NEAR(dsilu(x), dsilu_from_silu(x), 1e-14) << x;
    const double h = 1e-5;
    EXPECT_NEAR(dsilu(x), (silu(x + h) - silu(x - h)) / (2 * h), 1e-9) << x;
  }
}

TEST(Activations, TensorVersionsMatchScalars) {
  const TensorD x = randn({3, 4}, 1, "x", 3.0);
  const TensorD s = silu(x), d = dsilu(x);
  for (std::size_t i = 0; i < x.size(); ++i) {
    EXPECT_EQ(s[i], silu(x[i]));
    EXPECT_EQ(d[i], dsilu(x[i]));
  }
}

TEST(VanillaFFN, HandComputedRelu) {
  // w1 rows are keys, w2 rows are values.
  VanillaFFNParams<double> p{TensorD::matrix({{1, 0}, {0, -1}}),
                             TensorD::matrix({{2, 3}, {5, 7}}),
                             Nonlinearity::kRelu};
  const TensorD x = TensorD::matrix({{1, 2}});
  // keys: [1, -2] -> relu [1, 0] -> 1·[2,3]
  EXPECT_EQ(vanilla_ffn(x, p), TensorD::matrix({{2, 3}}));
}

TEST(SwiGLU, MatchesLoopOracle) {
  Dice dice(2, "swiglu");
  for (int i = 0; i < 15; ++i) {
    const std::size_t L = dice(1, 8), dm = dice(1, 10), dff = dice(1, 20);
    const TensorD x = randn({L, dm}, i, "x");
    const SwiGLUParams<double> p{randn({dm, dff}, i, "up", 0.5),
                                 randn({dm, dff}, i, "gate", 0.5),
                                 randn({dff, dm}, i, "down", 0.5)};
    EXPECT_LT(max_rel_error(swiglu_forward(x, p), oracle::swiglu(x, p)), 1e-13);
  }
}

TEST(SwiGLU, EqualsKeyValueForm) {
  Dice dice(3, "kv");
  for (int i = 0; i < 15; ++i) {
    const std::size_t L = dice(1, 8), dm = dice(1, 10), dff = dice(1, 20);
    const TensorD x = randn({L, dm}, i, "x");
    const SwiGLUParams<double> p{randn({dm, dff}, i, "up"),
                                 randn({dm, dff}, i, "gate"),
                                 randn({dff, dm}, i, "down")};
    EXPECT_LT(max_rel_error(ffn_tilde(x, transpose2d(p.w_gate),
                                      transpose2d(p.w_up), p.w_down),
                            swiglu_forward(x, p)),
              1e-12);
  }
}

TEST(SwiGLU, LedgerPeakIsClosedForm) {
  const TensorD x = randn({5, 6}, 4, "x");
  const SwiGLUParams<double> p{randn({6, 11}, 4, "up"), randn({6, 11}, 4, "gate"),
                               randn({11, 6}, 4, "down")};
  MemoryLedger ledger;
  swiglu_forward(x, p, &ledger);
  EXPECT_EQ(ledger.peak_elements(), 5u * 6u + 3u * 5u * 11u);
  EXPECT_EQ(ledger.live_elements(), 0u);
}

TEST(SwiGLU, RejectsMismatchedWeights) {
  const SwiGLUParams<double> p{TensorD({4, 3}), TensorD({4, 2}), TensorD({3, 4})};
  EXPECT_THROW(swiglu_forward(TensorD({2, 4}), p), DimensionError);
}

TEST(PKV, RowsAreConvexCombinationsOfValues) {
  const TensorD q = randn({6, 4}, 5, "q");
  const PKVParams<double> p{randn({9, 4}, 5, "k"), randn({9, 4}, 5, "v")};
  const TensorD probs = softmax_rows(scale(matmul_nt(q, p.k), 0.5));
  for (std::size_t l = 0; l < 6; ++l) {
    double s = 0.0;
    for (std::size_t n = 0; n < 9; ++n) {
      EXPECT_GT(probs(l, n), 0.0);
      s += probs(l, n);
    }
    EXPECT_NEAR(s, 1.0, 1e-15);
  }
  EXPECT_LT(max_rel_error(pkv_forward(q, p), matmul(probs, p.v)), 1e-14);
}

TEST(PKV, SoftmaxIsShiftInvariantAndStable) {
  const TensorD z = TensorD::matrix({{1000, 1001, 999}});
  const TensorD s = softmax_rows(z);
  const TensorD t = softmax_rows(add(z, -1000.0));
  EXPECT_TRUE(all_finite(s));
  EXPECT_LT(max_abs_diff(s, t), 1e-15);
}

}  // namespace
}  // namespace flashmhf
