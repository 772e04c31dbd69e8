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
#include "flashmhf/grad.h"
#include "flashmhf/mhffn.h"
#include "flashmhf/ops.h"
#include "test_util.h"

namespace flashmhf {
namespace {

using testing::Dice;
using testing::randn;

TEST(FiniteDiff, QuadraticIsExact) {
  const TensorD x = TensorD::matrix({{1, -2, 3}});
  const TensorD g = finite_diff([](const TensorD& a) { return mul(a, a); }, x, 1e-3);
  EXPECT_LT(max_abs_diff(g, scale(x, 2.0)), 1e-9);
}

TEST(FiniteDiff, NamesNonFiniteCoordinate) {
  const TensorD x = TensorD::matrix({{1, 1e-4}});
  try {
    finite_diff(
        [](const TensorD& a) {
          TensorD out = a;
          out[1] = std::log(a[1]);
          return out;
        },
        x, 1e-3);
    FAIL() << "expected NumericError";
  } catch (const NumericError& e) {
    EXPECT_NE(std::string(e.what()).find("coordinate 1"), std::string::npos);
  }
  EXPECT_THROW(finite_diff([](const TensorD& a) { return a; }, x, 0.0),
               ConfigError);
}

TEST(GateBackward, MatchesFiniteDifferences) {
  Dice dice(1, "gate");
  for (double eps : {1e-6, 0.3}) {
    for (int i = 0; i < 6; ++i) {
      const std::size_t L = dice(1, 4), H = dice(1, 3), E = dice(1, 5);
      const TensorD logits = randn({L, H, E}, i, "p", 2.0);
      const TensorD dr = randn({L, H, E}, i, "dr");
      TensorD eye({H, E, E});
      for (std::size_t h = 0; h < H; ++h)
        for (std::size_t e = 0; e < E; ++e) eye(h, e, e) = 1.0;
      const TensorD fd = finite_diff(
          [&](const TensorD& p) {
            return mul(oracle::gate_weights(p, eye, eps), dr);
          },
          logits, 1e-5);
      EXPECT_LT(max_rel_error(gate_backward(logits, dr, eps), fd), 1e-8);
    }
  }
}

TEST(GateBackward, UniformUpstreamGradientNearlyCancels) {
  // Σ_e R_e = S/(S+eps) is almost constant, so a constant dR barely moves P.
  const TensorD logits = randn({3, 2, 4}, 2, "p");
  const TensorD dp = gate_backward(logits, TensorD::full({3, 2, 4}, 1.0), 1e-6);
  for (double v : dp.data()) EXPECT_LT(std::abs(v), 1e-6);
}

TEST(ModuleBackward, MatchesFiniteDifferencesForEveryTensor) {
  Dice dice(3, "module");
  for (int s = 0; s < 6; ++s) {
    const FlashDims d{HeadLayout{dice(1, 2), dice(1, 4)}, dice(1, 2), dice(1, 6)};
    const std::size_t L = dice(1, 4);
    const TileSpec t{dice(1, L + 1), dice(1, d.d_e + 1)};
    const auto p = init_params(d, s, 0.5);
    const TensorD x = randn({L, d.d_model()}, s, "x");
    const TensorD dout = randn({L, d.d_model()}, s, "dout");
    const GradBundle g = flashmhf_backward(x, p, d, dout, t);

    auto fd_param = [&](TensorD FlashMHFParams<double>::*field) {
      return finite_diff(
          [&](const TensorD& a) {
            auto q = p;
            q.*field = a;
            return mul(flashmhf_forward(x, q, d, t), dout);
          },
          p.*field, 1e-5);
    };
    EXPECT_LT(max_rel_error(g.dw_in, fd_param(&FlashMHFParams<double>::w_in)), 1e-7);
    EXPECT_LT(max_rel_error(g.dk, fd_param(&FlashMHFParams<double>::k)), 1e-7);
    EXPECT_LT(max_rel_error(g.du, fd_param(&FlashMHFParams<double>::u)), 1e-7);
    EXPECT_LT(max_rel_error(g.dv, fd_param(&FlashMHFParams<double>::v)), 1e-7);
    EXPECT_LT(max_rel_error(g.dw_gate, fd_param(&FlashMHFParams<double>::w_gate)),
              1e-7);
    EXPECT_LT(max_rel_error(g.dw_out, fd_param(&FlashMHFParams<double>::w_out)),
              1e-7);
    const TensorD fdx = finite_diff(
        [&](const TensorD& a) { return mul(flashmhf_forward(a, p, d, t), dout); },
        x, 1e-5);
    EXPECT_LT(max_rel_error(g.dx, fdx), 1e-7);
  }
}

TEST(ModuleBackward, OverriddenGateCutsGatePath) {
  const FlashDims d{HeadLayout{2, 3}, 2, 4};
  const auto p = init_params(d, 4, 0.5);
  const TensorD x = randn({5, 6}, 4, "x");
  const TensorD r = TensorD::full({5, 2, 2}, 0.5);
  const GradBundle g = flashmhf_backward(x, p, d, randn({5, 6}, 4, "d"), {}, &r);
  for (double v : g.dw_gate.data()) EXPECT_EQ(v, 0.0);
  const TensorD dout = randn({5, 6}, 4, "d");
  const TensorD fd = finite_diff(
      [&](const TensorD& a) {
        auto q = p;
        q.w_in = a;
        return mul(flashmhf_forward(x, q, d, {}, nullptr, &r), dout);
      },
      p.w_in, 1e-5);
  EXPECT_LT(max_rel_error(g.dw_in, fd), 1e-7);
}

TEST(ModuleBackward, UnitGateGivesNaiveMHFFNGradients) {
  // E = 1 with R ≡ 1 is the naive module; its input gradient must agree with
  // differencing mhffn_forward directly.
  const FlashDims d{HeadLayout{2, 2}, 1, 5};
  const auto p = init_params(d, 5, 0.5);
  const TensorD x = randn({3, 4}, 5, "x");
  const TensorD ones = TensorD::full({3, 2, 1}, 1.0);
  const TensorD dout = randn({3, 4}, 5, "d");
  const GradBundle g = flashmhf_backward(x, p, d, dout, {}, &ones);
  const Shape kuv{2, 5, 2};
  const NaiveMHFFNParams<double> np{p.w_in, p.k.reshaped(kuv), p.u.reshaped(kuv),
                                    p.v.reshaped(kuv), p.w_out};
  const TensorD fd = finite_diff(
      [&](const TensorD& a) { return mul(mhffn_forward(a, np), dout); }, x, 1e-5);
  EXPECT_LT(max_rel_error(g.dx, fd), 1e-7);
}

TEST(ModuleBackward, RejectsMismatchedUpstreamGradient) {
  const FlashDims d{HeadLayout{1, 2}, 1, 2};
  const auto p = init_params(d, 6);
  EXPECT_THROW(flashmhf_backward(TensorD({3, 2}), p, d, TensorD({2, 2})),
               DimensionError);
}

}  // namespace
}  // namespace flashmhf
