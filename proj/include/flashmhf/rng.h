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
#include <random>
#include <string_view>

#include "flashmhf/tensor.h"

namespace flashmhf {

// FNV-1a, used to turn a tensor role tag into a stable sub-stream id.
constexpr std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

// Deterministic generator for the (seed, tag) pair. Distinct tags give
// independent streams under the same seed.
std::mt19937_64 make_stream(std::uint64_t seed, std::string_view tag);

// i.i.d. normal(mean, stddev) entries drawn from make_stream(seed, tag).
TensorD normal_tensor(const Shape& shape, double mean, double stddev,
                      std::uint64_t seed, std::string_view tag);

}  // namespace flashmhf
