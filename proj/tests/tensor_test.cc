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

#include "flashmhf/bench/oracles.h"
#include "flashmhf/errors.h"
#include "flashmhf/ops.h"
#include "test_util.h"

namespace flashmhf {
namespace {

using testing::Dice;
using testing::randn;

TEST(Tensor, RowMajorStrides) {
  TensorD t({2, 3, 4});
  EXPECT_EQ(t.strides(), (std::vector<std::size_t>{12, 4, 1}));
  t(1, 2, 3) = 5.0;
  EXPECT_EQ(t[23], 5.0);
  const std::size_t idx[] = {1, 2, 3};
  EXPECT_EQ(t.flat_index(idx), 23u);
}

TEST(Tensor, RejectsZeroExtents) {
  EXPECT_THROW(TensorD({3, 0}), DimensionError);
}

TEST(Tensor, RejectsDataOfWrongLength) {
  EXPECT_THROW(TensorD({2, 2}, std::vector<double>(3)), DimensionError);
}

TEST(Tensor, CheckedAccessRejectsBadIndices) {
  TensorD t({2, 2});
  const std::size_t out_of_range[] = {2, 0};
  const std::size_t wrong_rank[] = {0};
  EXPECT_THROW(t.at(out_of_range), DimensionError);
  EXPECT_THROW(t.at(wrong_rank), RankError);
}

TEST(Tensor, ReshapeKeepsElementCount) {
  const TensorD t = TensorD::matrix({{1, 2, 3}, {4, 5, 6}});
  EXPECT_EQ(t.reshaped({3, 2})(2, 1), 6.0);
  EXPECT_THROW(t.reshaped({4, 2}), DimensionError);
}

TEST(Ops, MatmulSmallExample) {
  const TensorD a = TensorD::matrix({{1, 2}, {3, 4}});
  const TensorD b = TensorD::matrix({{5, 6}, {7, 8}});
  EXPECT_EQ(matmul(a, b), TensorD::matrix({{19, 22}, {43, 50}}));
}

TEST(Ops, MatmulRejectsInnerMismatch) {
  EXPECT_THROW(matmul(TensorD({2, 3}), TensorD({2, 3})), DimensionError);
}

TEST(Ops, MatmulMatchesLoopOracle) {
  Dice dice(1, "matmul");
  for (int i = 0; i < 30; ++i) {
    const std::size_t m = dice(1, 9), k = dice(1, 9), n = dice(1, 9);
    const TensorD a = randn({m, k}, i, "a"), b = randn({k, n}, i, "b");
    EXPECT_LT(max_rel_error(matmul(a, b), oracle::matmul(a, b)), 1e-14);
    EXPECT_LT(max_rel_error(matmul_nt(a, transpose2d(b)), matmul(a, b)), 1e-14);
    EXPECT_LT(max_rel_error(matmul_tn(transpose2d(a), b), matmul(a, b)), 1e-14);
  }
}

TEST(Ops, MatmulIsAssociative) {
  Dice dice(2, "assoc");
  for (int i = 0; i < 20; ++i) {
    const std::size_t m = dice(1, 7), k = dice(1, 7), n = dice(1, 7),
                      p = dice(1, 7);
    const TensorD a = randn({m, k}, i, "a"), b = randn({k, n}, i, "b"),
                  c = randn({n, p}, i, "c");
    EXPECT_LT(max_rel_error(matmul(matmul(a, b), c), matmul(a, matmul(b, c))),
              1e-13);
  }
}

TEST(Ops, IdentityIsNeutral) {
  const TensorD a = randn({4, 5}, 3, "a");
  EXPECT_EQ(matmul(TensorD::identity(4), a), a);
  EXPECT_EQ(matmul(a, TensorD::identity(5)), a);
}

TEST(Ops, FloatMatmulAccumulatesInDouble) {
  // 1 + 1e-8·k sums that a float accumulator would round away entirely.
  const std::size_t k = 4096;
  TensorF a({1, k}), b({k, 1});
  a.fill(1.0f);
  b.fill(1.0f);
  b[0] = 1e8f;
  const TensorF c = matmul(a, b);
  EXPECT_FLOAT_EQ(c[0], 1e8f + 4095.0f);
}

TEST(Ops, ElementwiseHelpers) {
  const TensorD a = TensorD::matrix({{1, -2}}), b = TensorD::matrix({{3, 4}});
  EXPECT_EQ(add(a, b), TensorD::matrix({{4, 2}}));
  EXPECT_EQ(sub(a, b), TensorD::matrix({{-2, -6}}));
  EXPECT_EQ(mul(a, b), TensorD::matrix({{3, -8}}));
  EXPECT_EQ(scale(a, 2.0), TensorD::matrix({{2, -4}}));
  EXPECT_EQ(sum(b), 7.0);
  EXPECT_EQ(max_abs_diff(a, b), 6.0);
  EXPECT_THROW(add(a, TensorD({2, 1})), DimensionError);
}

TEST(Ops, RelativeErrorUsesUnitFloor) {
  const TensorD a = TensorD::matrix({{1e-3, 100}});
  const TensorD b = TensorD::matrix({{2e-3, 101}});
  // 1e-3 on the first entry (unit floor), 1/101 on the second.
  EXPECT_DOUBLE_EQ(max_rel_error(a, b), 1.0 / 101);
}

TEST(Ops, SubtensorRoundTrip) {
  TensorD t = randn({2, 3, 4, 5}, 4, "t");
  const TensorD block = subtensor(t, {1, 2});
  ASSERT_EQ(block.shape(), (Shape{4, 5}));
  EXPECT_EQ(block(3, 4), t(1, 2, 3, 4));
  TensorD z({2, 3, 4, 5});
  set_subtensor(z, {1, 2}, block);
  EXPECT_EQ(subtensor(z, {1, 2}), block);
  EXPECT_EQ(z(0, 0, 0, 0), 0.0);
}

TEST(Ops, AllFiniteDetectsNan) {
  TensorD t({2});
  EXPECT_TRUE(all_finite(t));
  t[1] = std::nan("");
  EXPECT_FALSE(all_finite(t));
}

}  // namespace
}  // namespace flashmhf
