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
#include <memory>
#include <string>
#include <vector>

#include "flashmhf/model.h"
#include "flashmhf/tensor.h"

namespace flashmhf::bench {

// Position-wise regression: students learn a frozen random SwiGLU teacher
// from i.i.d. normal tokens. Tokens are cut into sequences of seq_len; the
// first 90% of sequences train, the rest evaluate.
struct ToyConfig {
  std::uint64_t seed = 0;
  std::size_t d_model = 32;
  std::size_t seq_len = 64;
  std::size_t tokens = 8192;
  std::size_t steps = 2000;
  std::size_t teacher_d_ff = 64;
  // Heads of the flashmhf, naive_mhffn and pkv students.
  std::size_t heads = 1;
  // FlashMHF sub-network count; the other students' widths are matched to
  // the resulting parameter count.
  std::size_t flash_E = 2;
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.95;
  double adam_eps = 1e-8;
  // A train loss above divergence_factor × the first step's loss stops the
  // run and flags it.
  double divergence_factor = 10.0;
  std::vector<std::string> methods = {"flashmhf", "swiglu", "naive_mhffn",
                                      "pkv"};
};

// Trainable model with a hand-written backward.
class Student {
 public:
  virtual ~Student() = default;
  virtual std::string name() const = 0;
  virtual TensorD forward(const TensorD& x) = 0;
  // Fills grads() for the loss whose output gradient is d_out. Must follow
  // a forward on the same x.
  virtual void backward(const TensorD& x, const TensorD& d_out) = 0;
  virtual std::vector<TensorD*> params() = 0;
  virtual std::vector<TensorD*> grads() = 0;
  std::size_t parameter_count();
};

// Builds the named student ("flashmhf", "swiglu", "naive_mhffn", "pkv")
// with widths matched for `config`. Throws ConfigError for unknown names.
std::unique_ptr<Student> make_student(const std::string& method,
                                      const ToyConfig& config);

// The FlashMHF student's dimensions for `config`.
FlashDims toy_flash_dims(const ToyConfig& config);

// Mean over all elements of (a − b)².
double mse(const TensorD& a, const TensorD& b);

struct ToyMethodResult {
  std::string method;
  std::size_t parameter_count = 0;
  double initial_eval_mse = 0.0;
  double final_eval_mse = 0.0;
  std::vector<double> train_mse;  // one per step run
  bool diverged = false;
};

struct ToyRun {
  std::vector<ToyMethodResult> results;
  // Trained FlashMHF weights, when that method was part of the run.
  std::unique_ptr<FlashMHFParams<double>> flash_params;
  FlashDims flash_dims;
};

// `log`, when given, receives a progress line every 100 steps and a summary
// line per method.
ToyRun train_toy(const ToyConfig& config, std::ostream* log = nullptr);

}  // namespace flashmhf::bench
