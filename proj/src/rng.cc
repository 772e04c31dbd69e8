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

#include "flashmhf/rng.h"

namespace flashmhf {

std::mt19937_64 make_stream(std::uint64_t seed, std::string_view tag) {
  const std::uint64_t t = fnv1a64(tag);
  std::seed_seq seq{static_cast<std::uint32_t>(seed),
                    static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(t),
                    static_cast<std::uint32_t>(t >> 32)};
  return std::mt19937_64(seq);
}

TensorD normal_tensor(const Shape& shape, double mean, double stddev,
                      std::uint64_t seed, std::string_view tag) {
  auto gen = make_stream(seed, tag);
  std::normal_distribution<double> dist(mean, stddev);
  TensorD t(shape);
  for (auto& x : t.data()) x = dist(gen);
  return t;
}

}  // namespace flashmhf
