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
#include <string>

#include "flashmhf/errors.h"

namespace flashmhf {

// Blocking of the sequence and intermediate axes. Neither extent has to
// divide its axis; partial tail tiles are masked.
struct TileSpec {
  std::size_t block_seq = 64;
  std::size_t block_inter = 64;

  void validate() const {
    if (block_seq == 0 || block_inter == 0) {
      throw ConfigError("tile extents must be positive, got block_seq=" +
                        std::to_string(block_seq) +
                        " block_inter=" + std::to_string(block_inter));
    }
  }

  bool operator==(const TileSpec&) const = default;
};

constexpr std::size_t ceil_div(std::size_t a, std::size_t b) {
  return (a + b - 1) / b;
}

}  // namespace flashmhf
