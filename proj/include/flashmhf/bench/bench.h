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
#include <iosfwd>
#include <string>
#include <vector>

#include "flashmhf/ledger.h"
#include "flashmhf/tensor.h"
#include "flashmhf/tiles.h"

namespace flashmhf::bench {

// The efficiency table's shapes with L and every width divided by `scale`.
// H and E are counts and stay fixed. The SwiGLU baseline uses the 1.3B
// intermediate size (5504 at d_model 2048), scaled the same way.
struct BenchGrid {
  std::vector<std::size_t> seq_lens;
  std::size_t H = 16;
  std::size_t E = 22;
  std::size_t d_e = 384;
  std::size_t d_h = 128;
  std::size_t swiglu_d_ff = 5504;

  std::size_t d_model() const { return H * d_h; }
  // Per-head intermediate width of the naive baseline.
  std::size_t naive_d_ff() const { return E * d_e; }
};

// Throws ConfigError for scale < 1.
BenchGrid scaled_grid(int scale);

struct BenchConfig {
  int scale = 16;
  std::uint64_t seed = 0;
  Precision precision = Precision::kDouble;
  TileSpec tiles;
  // Configurations whose closed-form peak exceeds this are not run and are
  // reported with status "OOM".
  std::size_t element_budget = 8'000'000;
  int warmups = 2;
  int reps = 5;
  std::vector<Method> methods = {Method::kSwiGLU, Method::kNaiveMHFFN,
                                 Method::kFlashMHF};
  // Empty means the grid's sequence lengths.
  std::vector<std::size_t> seq_lens;
};

struct BenchRecord {
  std::string method;
  std::size_t L = 0;
  std::size_t d_model = 0;
  std::size_t H = 0;
  std::size_t E = 0;
  std::size_t d_e = 0;
  std::size_t d_h = 0;
  std::size_t block_seq = 0;
  std::size_t block_inter = 0;
  double wall_ms = 0.0;  // NaN when not run
  std::size_t peak_elements = 0;
  // "ok", "OOM", or "ledger_mismatch" (measured peak != closed form).
  std::string status;

  bool operator==(const BenchRecord&) const = default;
};

inline constexpr const char* kCsvHeader =
    "method,L,d_model,H,E,d_e,d_h,block_seq,block_inter,wall_ms,"
    "peak_elements,status";

// One record per (method, L), methods in config order. `progress`, when
// given, gets one line per record.
std::vector<BenchRecord> run_bench(const BenchConfig& config,
                                   std::ostream* progress = nullptr);

// Peak a single forward of `method` registers on the ledger, measured by
// running it on zero-free random inputs.
std::size_t measure_peak(Method method, std::size_t L, const BenchGrid& grid,
                         const TileSpec& tiles, std::uint64_t seed);

std::size_t closed_form_peak(Method method, std::size_t L,
                             const BenchGrid& grid, const TileSpec& tiles);

std::string to_csv(const std::vector<BenchRecord>& records);

// Throws FileError on a wrong header or a malformed row.
std::vector<BenchRecord> parse_csv(const std::string& text);

}  // namespace flashmhf::bench
