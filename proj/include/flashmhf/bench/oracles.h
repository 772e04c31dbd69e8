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

// Brute-force index-loop evaluations used only to verify the library. None
// of these call into ops, heads or the kernel, so they stay independent of
// the paths they check.

#include "flashmhf/ffn_reference.h"
#include "flashmhf/heads.h"
#include "flashmhf/mhffn.h"
#include "flashmhf/model.h"
#include "flashmhf/tensor.h"

namespace flashmhf::oracle {

TensorD matmul(const TensorD& a, const TensorD& b);

// out[l,h,j] = t[l, h·d_h + j], written with the 1-based formula
// t[l, (h−1)·d_h + j] translated index by index.
TensorD split_heads(const TensorD& t, const HeadLayout& layout);

TensorD swiglu(const TensorD& x, const SwiGLUParams<double>& p);

TensorD mhffn(const TensorD& x, const NaiveMHFFNParams<double>& p);

// Sigmoid-normalized gate weights with the given eps.
TensorD gate_weights(const TensorD& q, const TensorD& w_gate, double eps);

// Whole FlashMHF module; `gates` overrides the gate when non-null.
TensorD flashmhf(const TensorD& x, const FlashMHFParams<double>& p,
                 const FlashDims& dims, const TensorD* gates = nullptr);

}  // namespace flashmhf::oracle
