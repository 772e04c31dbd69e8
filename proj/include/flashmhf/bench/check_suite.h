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

#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace flashmhf::bench {

struct CheckResult {
  std::string name;
  bool passed = false;
  std::string detail;
};

struct CheckOptions {
  std::uint64_t seed = 0;
  std::size_t forward_configs = 100;
  std::size_t gradcheck_seeds = 25;
  std::size_t ledger_configs = 20;
  std::size_t degeneracy_configs = 20;
  int scale = 16;
};

// Blockwise module forward against the dense reference over random shapes
// (L ≤ 16, H ≤ 4, E ≤ 4, d_e ≤ 16, d_h ≤ 8) and random tiles, a third of
// them forced to leave tails on both axes. Double < 1e-10, single < 2e-3.
CheckResult check_tiled_forward(std::uint64_t seed, std::size_t configs);

// Analytic module gradients of every parameter and the input against
// central differences (h = 1e-5), one random shape per seed (L ≤ 4, H ≤ 2,
// E ≤ 2, d_e ≤ 6, d_h ≤ 4). Max relative error < 1e-6.
CheckResult check_module_gradients(std::uint64_t seed, std::size_t seeds);

// Kernel-level backward passes (dQ, dR, dK, dU, dV) against central
// differences of the blockwise forward with an arbitrary R.
CheckResult check_kernel_gradients(std::uint64_t seed);

CheckResult check_gate_backward(std::uint64_t seed);

// The SiLU derivative against central differences and its forward-value
// form.
CheckResult check_dsilu();

// Measured ledger peaks equal the closed forms for all three forwards and
// both backward passes; FlashMHF's peak ignores E·d_e; naive MH-FFN's peak is
// affine in H with slope L·d_ff.
CheckResult check_ledger_exactness(std::uint64_t seed, std::size_t configs);

// swiglu/flashmhf ≥ 3 at the largest L of the scaled grid and
// naive/flashmhf > 10 there.
CheckResult check_memory_ratios(int scale);

// E = 1 with unit gate equals naive MH-FFN; uniform gate equals the scaled
// concatenated sub-network; ffn_tilde with the SwiGLU weight assignment
// equals swiglu_forward; gate rows sum to S/(S + eps).
CheckResult check_degeneracies(std::uint64_t seed, std::size_t configs);

// subnet_dim(128) = 384 and the d_ff/d_h ratios 16, 21, 45.
CheckResult check_sizing_rule();

// Library paths against the brute-force oracles: matmul, split_heads,
// swiglu, naive MH-FFN, the dense FlashMHF reference and the gate.
CheckResult check_oracles(std::uint64_t seed);

// split/concat round trip and parameter container round trip.
CheckResult check_round_trips(std::uint64_t seed);

std::vector<CheckResult> run_check_suite(const CheckOptions& options);

// One "PASS name: detail" / "FAIL name: detail" line per result plus a
// summary line. Contains no timings, so equal seeds give equal bytes.
std::string format_check_report(const std::vector<CheckResult>& results);

bool all_passed(const std::vector<CheckResult>& results);

}  // namespace flashmhf::bench
