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

// Prints one PASS/FAIL line per acceptance criterion and exits nonzero if any
// fails.

#include <chrono>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#include "flashmhf/bench/check_suite.h"
#include "flashmhf/bench/toy.h"
#include "flashmhf/errors.h"

namespace {

using flashmhf::bench::CheckResult;
using Clock = std::chrono::steady_clock;

struct Outcome {
  bool passed;
  std::string detail;
};

Outcome from_checks(std::initializer_list<CheckResult> checks) {
  Outcome o{true, ""};
  for (const CheckResult& c : checks) {
    o.passed = o.passed && c.passed;
    if (!o.detail.empty()) o.detail += "; ";
    o.detail += c.name + (c.passed ? " ok (" : " FAILED (") + c.detail + ")";
  }
  return o;
}

Outcome with_time_limit(Outcome o, double seconds, double limit) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "; %.1f s (limit %.0f s)", seconds, limit);
  o.detail += buf;
  o.passed = o.passed && seconds < limit;
  return o;
}

Outcome toy_training() {
  int hits = 0;
  std::string detail;
  for (std::uint64_t seed = 0; seed < 4; ++seed) {
    flashmhf::bench::ToyConfig c;
    c.seed = seed;
    c.methods = {"flashmhf"};
    const auto run = flashmhf::bench::train_toy(c);
    const auto& r = run.results.at(0);
    const double ratio = r.final_eval_mse / r.initial_eval_mse;
    const bool ok = !r.diverged && r.train_mse.size() == c.steps && ratio < 0.1;
    hits += ok;
    char buf[96];
    std::snprintf(buf, sizeof buf, "%sseed %llu eval ratio %.4f%s",
                  seed ? ", " : "", static_cast<unsigned long long>(seed), ratio,
                  ok ? "" : " (miss)");
    detail += buf;
  }
  detail += "; " + std::to_string(hits) + "/4 seeds below 0.1";
  return {hits >= 3, detail};
}

}  // namespace

int main() {
  namespace b = flashmhf::bench;
  struct Criterion {
    const char* title;
    double limit_s;  // 0 means untimed
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> criteria = {
      {"tiled forward equals dense reference", 30,
       [] { return from_checks({b::check_tiled_forward(0, 100)}); }},
      {"module gradients match central differences", 60,
       [] { return from_checks({b::check_module_gradients(0, 25)}); }},
      {"memory ledger equals closed forms", 0,
       [] { return from_checks({b::check_ledger_exactness(0, 20)}); }},
      {"memory ratios on the scaled grid", 0,
       [] { return from_checks({b::check_memory_ratios(16)}); }},
      {"structural degeneracies", 0,
       [] { return from_checks({b::check_degeneracies(0, 20)}); }},
      {"sub-network sizing rule", 0,
       [] { return from_checks({b::check_sizing_rule()}); }},
      {"toy regression training", 300, toy_training},
  };

  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto start = Clock::now();
    Outcome o;
    try {
      o = criteria[i].run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double s = std::chrono::duration<double>(Clock::now() - start).count();
    if (criteria[i].limit_s > 0) o = with_time_limit(o, s, criteria[i].limit_s);
    failures += !o.passed;
    std::printf("%s criterion %zu: %s: %s\n", o.passed ? "PASS" : "FAIL", i + 1,
                criteria[i].title, o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%zu/%zu criteria passed\n", criteria.size() - failures,
              criteria.size());
  return failures == 0 ? 0 : 1;
}
