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

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "flashmhf/tiles.h"

namespace flashmhf {

// Exact count of live intermediate-activation scalar slots. The ledger does
// not own memory: computations register each buffer they materialize and
// release it when it dies. Element counts, not bytes, so the single and
// double paths report identical numbers.
class MemoryLedger {
 public:
  enum class EventKind { kAlloc, kRelease };

  struct Event {
    EventKind kind;
    std::size_t elements;
    std::string label;
  };

  void allocate(std::size_t elements, std::string_view label);
  void release(std::size_t elements, std::string_view label);

  std::size_t live_elements() const { return live_; }
  std::size_t peak_elements() const { return peak_; }
  const std::vector<Event>& events() const { return events_; }

  // Any allocation that would push live_elements past `limit` throws
  // LedgerError before it is recorded.
  void set_limit(std::optional<std::size_t> limit) { limit_ = limit; }
  std::optional<std::size_t> limit() const { return limit_; }

  // Peak recomputed from the event log's prefix sums.
  std::size_t replay_peak() const;

  void reset();

 private:
  std::size_t live_ = 0;
  std::size_t peak_ = 0;
  std::optional<std::size_t> limit_;
  std::vector<Event> events_;
};

// Registers one buffer for the lifetime of the object. A null ledger makes
// this a no-op, so hot paths can always construct one.
class LedgerBuffer {
 public:
  LedgerBuffer() = default;
  LedgerBuffer(MemoryLedger* ledger, std::size_t elements, std::string_view label)
      : ledger_(ledger), elements_(elements), label_(label) {
    if (ledger_) ledger_->allocate(elements_, label_);
  }
  ~LedgerBuffer() { release(); }

  LedgerBuffer(const LedgerBuffer&) = delete;
  LedgerBuffer& operator=(const LedgerBuffer&) = delete;
  LedgerBuffer(LedgerBuffer&& other) noexcept { *this = std::move(other); }
  LedgerBuffer& operator=(LedgerBuffer&& other) noexcept {
    if (this != &other) {
      release();
      ledger_ = other.ledger_;
      elements_ = other.elements_;
      label_ = std::move(other.label_);
      other.ledger_ = nullptr;
    }
    return *this;
  }

  void release() {
    if (ledger_) {
      ledger_->release(elements_, label_);
      ledger_ = nullptr;
    }
  }

 private:
  MemoryLedger* ledger_ = nullptr;
  std::size_t elements_ = 0;
  std::string label_;
};

enum class Method { kSwiGLU, kNaiveMHFFN, kFlashMHF };

std::string_view method_name(Method m);
std::optional<Method> parse_method(std::string_view name);

// Everything the closed forms read. d_ff is the intermediate width of the
// dense methods (per head for naive MH-FFN); the FlashMHF form ignores it,
// as well as E and d_e.
struct LedgerShape {
  std::size_t L = 1;
  std::size_t H = 1;
  std::size_t E = 1;
  std::size_t d_e = 1;
  std::size_t d_h = 1;
  std::size_t d_model = 1;
  std::size_t d_ff = 1;
  TileSpec tiles;
};

// Output (L·d_model) plus gate pre-activation, up projection and their
// product, each L·d_ff, all live at once.
std::size_t swiglu_peak_elements(std::size_t L, std::size_t d_model,
                                 std::size_t d_ff);

// Output (L·d_model) plus the H per-head products (L·d_ff each) that wait
// for the batched V multiplication, plus the transient gate pre-activation
// and up projection of the head being formed: L·d_model + (H + 2)·L·d_ff.
std::size_t naive_mhffn_peak_elements(std::size_t L, std::size_t H,
                                      std::size_t d_model, std::size_t d_ff);

// Output (L·d_model) plus one grid cell's working set: accumulator
// block_seq·d_h and the M and N tiles, block_seq·block_inter each. Cells run
// serially so exactly one cell is live.
std::size_t flashmhf_peak_elements(std::size_t L, std::size_t d_model,
                                   std::size_t d_h, const TileSpec& tiles);

// dQ/dR backward pass: outputs dQ (L·d_model) and dR (L·H·E) plus one cell's
// dQ accumulator, dR row accumulator and the M, N, dA tiles.
std::size_t flashmhf_backward_dq_dr_peak_elements(std::size_t L, std::size_t H,
                                                  std::size_t E,
                                                  std::size_t d_h,
                                                  const TileSpec& tiles);

// dK/dU/dV pass: one cell's three block_inter·d_h accumulators plus the M, N,
// dA tiles. Parameter-gradient outputs are not activations and are not
// counted.
std::size_t flashmhf_backward_dkuv_peak_elements(std::size_t d_h,
                                                 const TileSpec& tiles);

std::size_t ledger_closed_form(Method method, const LedgerShape& shape);

}  // namespace flashmhf
