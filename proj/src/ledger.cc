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

#include "flashmhf/ledger.h"

#include <algorithm>

namespace flashmhf {

void MemoryLedger::allocate(std::size_t elements, std::string_view label) {
  if (limit_ && live_ + elements > *limit_) {
    throw LedgerError("ledger limit exceeded allocating " +
                      std::to_string(elements) + " elements for '" +
                      std::string(label) + "': live " + std::to_string(live_) +
                      ", limit " + std::to_string(*limit_));
  }
  live_ += elements;
  peak_ = std::max(peak_, live_);
  events_.push_back({EventKind::kAlloc, elements, std::string(label)});
}

void MemoryLedger::release(std::size_t elements, std::string_view label) {
  if (elements > live_) {
    throw LedgerError("ledger release of " + std::to_string(elements) +
                      " elements for '" + std::string(label) +
                      "' exceeds live count " + std::to_string(live_));
  }
  live_ -= elements;
  events_.push_back({EventKind::kRelease, elements, std::string(label)});
}

std::size_t MemoryLedger::replay_peak() const {
  std::size_t live = 0, peak = 0;
  for (const Event& e : events_) {
    if (e.kind == EventKind::kAlloc) {
      live += e.elements;
      peak = std::max(peak, live);
    } else {
      live -= e.elements;
    }
  }
  return peak;
}

void MemoryLedger::reset() {
  live_ = 0;
  peak_ = 0;
  events_.clear();
}

std::string_view method_name(Method m) {
  switch (m) {
    case Method::kSwiGLU:
      return "swiglu";
    case Method::kNaiveMHFFN:
      return "naive_mhffn";
    case Method::kFlashMHF:
      return "flashmhf";
  }
  return "unknown";
}

std::optional<Method> parse_method(std::string_view name) {
  for (Method m : {Method::kSwiGLU, Method::kNaiveMHFFN, Method::kFlashMHF}) {
    if (method_name(m) == name) return m;
  }
  return std::nullopt;
}

std::size_t swiglu_peak_elements(std::size_t L, std::size_t d_model,
                                 std::size_t d_ff) {
  return 3 * L * d_ff + L * d_model;
}

std::size_t naive_mhffn_peak_elements(std::size_t L, std::size_t H,
                                      std::size_t d_model, std::size_t d_ff) {
  return L * d_model + (H + 2) * L * d_ff;
}

std::size_t flashmhf_peak_elements(std::size_t L, std::size_t d_model,
                                   std::size_t d_h, const TileSpec& tiles) {
  return L * d_model +
         tiles.block_seq * (2 * tiles.block_inter + d_h);
}

std::size_t flashmhf_backward_dq_dr_peak_elements(std::size_t L, std::size_t H,
                                                  std::size_t E,
                                                  std::size_t d_h,
                                                  const TileSpec& tiles) {
  return L * H * d_h + L * H * E +
         tiles.block_seq * (d_h + 1 + 3 * tiles.block_inter);
}

std::size_t flashmhf_backward_dkuv_peak_elements(std::size_t d_h,
                                                 const TileSpec& tiles) {
  return 3 * tiles.block_inter * (d_h + tiles.block_seq);
}

std::size_t ledger_closed_form(Method method, const LedgerShape& s) {
  switch (method) {
    case Method::kSwiGLU:
      return swiglu_peak_elements(s.L, s.d_model, s.d_ff);
    case Method::kNaiveMHFFN:
      return naive_mhffn_peak_elements(s.L, s.H, s.d_model, s.d_ff);
    case Method::kFlashMHF:
      return flashmhf_peak_elements(s.L, s.d_model, s.d_h, s.tiles);
  }
  return 0;
}

}  // namespace flashmhf
