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

#include <filesystem>
#include <string>
#include <variant>
#include <vector>

#include "flashmhf/model.h"
#include "flashmhf/tensor.h"

namespace flashmhf {

// Flat binary container of named tensors. All integers and values are
// little-endian regardless of host order:
//
//   magic      8 bytes  "FMHFPAR1"
//   count      u32
//   count × {
//     name_len  u32
//     name      name_len bytes (UTF-8, no terminator)
//     precision u8     0 = float32, 1 = float64
//     rank      u32
//     extents   rank × u64
//     values    product(extents) × (4 | 8) bytes, row-major
//   }
//
// docs/param_format.md carries the same description.
struct NamedTensor {
  std::string name;
  std::variant<TensorF, TensorD> tensor;
};

void write_container(const std::filesystem::path& path,
                     const std::vector<NamedTensor>& tensors);
std::vector<NamedTensor> read_container(const std::filesystem::path& path);

// In-memory forms of the same encoding.
std::string encode_container(const std::vector<NamedTensor>& tensors);
std::vector<NamedTensor> decode_container(const std::string& bytes);

// Tensors named w_in, k, u, v, w_gate, w_out.
std::vector<NamedTensor> to_container(const FlashMHFParams<double>& params);

// Inverse of to_container; shapes are checked against `dims`. Float32
// entries are widened.
FlashMHFParams<double> params_from_container(
    const std::vector<NamedTensor>& tensors, const FlashDims& dims);

}  // namespace flashmhf
