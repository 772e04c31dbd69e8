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

#include "flashmhf/errors.h"
#include "flashmhf/ledger.h"

namespace flashmhf {
namespace {

TEST(Ledger, TracksLiveAndPeak) {
  MemoryLedger l;
  l.allocate(10, "a");
  l.allocate(5, "b");
  l.release(10, "a");
  l.allocate(3, "c");
  EXPECT_EQ(l.live_elements(), 8u);
  EXPECT_EQ(l.peak_elements(), 15u);
  EXPECT_EQ(l.replay_peak(), 15u);
  ASSERT_EQ(l.events().size(), 4u);
  EXPECT_EQ(l.events()[2].kind, MemoryLedger::EventKind::kRelease);
  EXPECT_EQ(l.events()[2].label, "a");
  l.reset();
  EXPECT_EQ(l.peak_elements(), 0u);
  EXPECT_TRUE(l.events().empty());
}

TEST(Ledger, ReleasingMoreThanLiveThrows) {
  MemoryLedger l;
  l.allocate(2, "a");
  EXPECT_THROW(l.release(3, "a"), LedgerError);
}

TEST(Ledger, LimitRejectsAllocationBeforeRecording) {
  MemoryLedger l;
  l.set_limit(10);
  l.allocate(8, "a");
  EXPECT_THROW(l.allocate(3, "b"), LedgerError);
  EXPECT_EQ(l.live_elements(), 8u);
  EXPECT_EQ(l.peak_elements(), 8u);
}

TEST(LedgerBuffer, RegistersForItsLifetime) {
  MemoryLedger l;
  {
    LedgerBuffer a(&l, 4, "a");
    LedgerBuffer b(&l, 6, "b");
    EXPECT_EQ(l.live_elements(), 10u);
    LedgerBuffer c = std::move(a);
    EXPECT_EQ(l.live_elements(), 10u);
    b.release();
    EXPECT_EQ(l.live_elements(), 4u);
  }
  EXPECT_EQ(l.live_elements(), 0u);
  EXPECT_EQ(l.peak_elements(), 10u);
  LedgerBuffer detached(nullptr, 100, "x");
}

TEST(Method, NamesRoundTrip) {
  for (Method m : {Method::kSwiGLU, Method::kNaiveMHFFN, Method::kFlashMHF}) {
    EXPECT_EQ(parse_method(method_name(m)), m);
  }
  EXPECT_FALSE(parse_method("pkv").has_value());
}

TEST(ClosedForms, HandEvaluated) {
  EXPECT_EQ(swiglu_peak_elements(10, 4, 6), 40u + 180u);
  EXPECT_EQ(naive_mhffn_peak_elements(10, 2, 4, 6), 40u + 4u * 60u);
  const TileSpec t{8, 16};
  // out L·d_model + acc 8·d_h + M, N 8·16 each
  EXPECT_EQ(flashmhf_peak_elements(10, 4, 2, t), 40u + 16u + 256u);
  // dQ L·H·d_h + dR L·H·E + dQ acc 8·d_h + one sub-network's dR rows (8)
  // + M, N, dA
  EXPECT_EQ(flashmhf_backward_dq_dr_peak_elements(10, 2, 3, 2, t),
            40u + 60u + 16u + 8u + 384u);
  // three 16·d_h accumulators + M, N, dA
  EXPECT_EQ(flashmhf_backward_dkuv_peak_elements(2, t), 96u + 384u);
}

TEST(ClosedForms, FlashIgnoresSubnetWidth) {
  LedgerShape a;
  a.L = 100;
  a.H = 4;
  a.d_h = 8;
  a.d_model = 32;
  a.E = 2;
  a.d_e = 10;
  LedgerShape b = a;
  b.E = 9;
  b.d_e = 700;
  b.d_ff = 6300;
  EXPECT_EQ(ledger_closed_form(Method::kFlashMHF, a),
            ledger_closed_form(Method::kFlashMHF, b));
  EXPECT_LT(ledger_closed_form(Method::kNaiveMHFFN, a),
            ledger_closed_form(Method::kNaiveMHFFN, b));
}

}  // namespace
}  // namespace flashmhf
