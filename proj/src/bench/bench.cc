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

#include "flashmhf/bench/bench.h"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>
#include <sstream>

#include "flashmhf/errors.h"
#include "flashmhf/ffn_reference.h"
#include "flashmhf/grad.h"
#include "flashmhf/mhffn.h"
#include "flashmhf/model.h"
#include "flashmhf/rng.h"

namespace flashmhf::bench {

namespace {

constexpr std::size_t kFullSeqLens[] = {192,  384,  768,  1536, 1920,
                                        2880, 4032, 8064, 16128};

std::size_t scaled(std::size_t full, int scale) {
  return std::max<std::size_t>(1, full / static_cast<std::size_t>(scale));
}

// Inputs for one method at one L, built once and reused across reps.
template <Real T>
struct Workload {
  Tensor<T> x;
  SwiGLUParams<T> swiglu;
  NaiveMHFFNParams<T> naive;
  FlashMHFParams<T> flash;
  FlashDims dims;
};

template <Real T>
Workload<T> make_workload(Method method, std::size_t L, const BenchGrid& grid,
                          std::uint64_t seed) {
  Workload<T> w;
  const std::size_t dm = grid.d_model();
  const double std_in = 1.0 / std::sqrt(static_cast<double>(dm));
  w.x = normal_tensor({L, dm}, 0.0, 1.0, seed, "bench.x").cast<T>();
  auto param = [&](const Shape& s, const char* tag) {
    return normal_tensor(s, 0.0, std_in, seed, tag).cast<T>();
  };
  switch (method) {
    case Method::kSwiGLU:
      w.swiglu = {param({dm, grid.swiglu_d_ff}, "bench.swiglu.up"),
                  param({dm, grid.swiglu_d_ff}, "bench.swiglu.gate"),
                  param({grid.swiglu_d_ff, dm}, "bench.swiglu.down")};
      break;
    case Method::kNaiveMHFFN: {
      const Shape kuv{grid.H, grid.naive_d_ff(), grid.d_h};
      w.naive = {param({dm, dm}, "bench.naive.w_in"),
                 param(kuv, "bench.naive.k"), param(kuv, "bench.naive.u"),
                 param(kuv, "bench.naive.v"),
                 param({dm, dm}, "bench.naive.w_out")};
      break;
    }
    case Method::kFlashMHF:
      w.dims = FlashDims{HeadLayout{grid.H, grid.d_h}, grid.E, grid.d_e};
      w.flash = init_params(w.dims, seed, std_in).template cast<T>();
      break;
  }
  return w;
}

template <Real T>
void run_once(Method method, const Workload<T>& w, const TileSpec& tiles,
              MemoryLedger* ledger) {
  switch (method) {
    case Method::kSwiGLU:
      swiglu_forward(w.x, w.swiglu, ledger);
      break;
    case Method::kNaiveMHFFN:
      mhffn_forward(w.x, w.naive, ledger);
      break;
    case Method::kFlashMHF:
      flashmhf_forward(w.x, w.flash, w.dims, tiles, ledger);
      break;
  }
}

template <Real T>
BenchRecord run_cell(Method method, std::size_t L, const BenchGrid& grid,
                     const BenchConfig& cfg) {
  BenchRecord rec;
  rec.method = std::string(method_name(method));
  rec.L = L;
  rec.d_model = grid.d_model();
  rec.H = grid.H;
  rec.E = grid.E;
  rec.d_e = grid.d_e;
  rec.d_h = grid.d_h;
  rec.block_seq = cfg.tiles.block_seq;
  rec.block_inter = cfg.tiles.block_inter;

  const std::size_t expected = closed_form_peak(method, L, grid, cfg.tiles);
  if (expected > cfg.element_budget) {
    rec.wall_ms = std::numeric_limits<double>::quiet_NaN();
    rec.peak_elements = expected;
    rec.status = "OOM";
    return rec;
  }

  const Workload<T> w = make_workload<T>(method, L, grid, cfg.seed);
  // The first warmup doubles as the ledger pass.
  MemoryLedger ledger;
  run_once(method, w, cfg.tiles, &ledger);
  for (int i = 1; i < cfg.warmups; ++i) run_once(method, w, cfg.tiles, nullptr);

  std::vector<double> times;
  for (int i = 0; i < cfg.reps; ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    run_once(method, w, cfg.tiles, nullptr);
    const auto t1 = std::chrono::steady_clock::now();
    times.push_back(std::chrono::duration<double, std::milli>(t1 - t0).count());
  }
  std::sort(times.begin(), times.end());
  const std::size_t n = times.size();
  rec.wall_ms = n % 2 ? times[n / 2] : 0.5 * (times[n / 2 - 1] + times[n / 2]);
  rec.wall_ms = std::max(rec.wall_ms, 1e-6);
  rec.peak_elements = ledger.peak_elements();
  rec.status = ledger.peak_elements() == expected && ledger.live_elements() == 0
                   ? "ok"
                   : "ledger_mismatch";
  return rec;
}

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

std::size_t parse_size(const std::string& s, std::size_t row) {
  std::size_t pos = 0;
  unsigned long long v = 0;
  try {
    v = std::stoull(s, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (s.empty() || pos != s.size() || s[0] == '-') {
    throw FileError("bench CSV row " + std::to_string(row) +
                    ": bad integer '" + s + "'");
  }
  return static_cast<std::size_t>(v);
}

double parse_double(const std::string& s, std::size_t row) {
  if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
  std::size_t pos = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (s.empty() || pos != s.size()) {
    throw FileError("bench CSV row " + std::to_string(row) +
                    ": bad number '" + s + "'");
  }
  return v;
}

}  // namespace

BenchGrid scaled_grid(int scale) {
  if (scale < 1) {
    throw ConfigError("scale must be >= 1, got " + std::to_string(scale));
  }
  BenchGrid g;
  for (std::size_t L : kFullSeqLens) g.seq_lens.push_back(scaled(L, scale));
  g.d_e = scaled(g.d_e, scale);
  g.d_h = scaled(g.d_h, scale);
  g.swiglu_d_ff = scaled(g.swiglu_d_ff, scale);
  return g;
}

std::size_t closed_form_peak(Method method, std::size_t L,
                             const BenchGrid& grid, const TileSpec& tiles) {
  LedgerShape s;
  s.L = L;
  s.H = grid.H;
  s.E = grid.E;
  s.d_e = grid.d_e;
  s.d_h = grid.d_h;
  s.d_model = grid.d_model();
  s.d_ff = method == Method::kSwiGLU ? grid.swiglu_d_ff : grid.naive_d_ff();
  s.tiles = tiles;
  return ledger_closed_form(method, s);
}

std::size_t measure_peak(Method method, std::size_t L, const BenchGrid& grid,
                         const TileSpec& tiles, std::uint64_t seed) {
  const Workload<double> w = make_workload<double>(method, L, grid, seed);
  MemoryLedger ledger;
  run_once(method, w, tiles, &ledger);
  return ledger.peak_elements();
}

std::vector<BenchRecord> run_bench(const BenchConfig& config,
                                   std::ostream* progress) {
  config.tiles.validate();
  if (config.reps < 1 || config.warmups < 1) {
    throw ConfigError("bench needs reps >= 1 and warmups >= 1");
  }
  const BenchGrid grid = scaled_grid(config.scale);
  const std::vector<std::size_t>& lens =
      config.seq_lens.empty() ? grid.seq_lens : config.seq_lens;
  std::vector<BenchRecord> out;
  for (Method m : config.methods) {
    for (std::size_t L : lens) {
      BenchRecord rec = config.precision == Precision::kSingle
                            ? run_cell<float>(m, L, grid, config)
                            : run_cell<double>(m, L, grid, config);
      if (progress) {
        *progress << rec.method << " L=" << rec.L << " peak=" << rec.peak_elements
                  << " status=" << rec.status << '\n';
      }
      out.push_back(std::move(rec));
    }
  }
  return out;
}

std::string to_csv(const std::vector<BenchRecord>& records) {
  std::string out = std::string(kCsvHeader) + "\n";
  char buf[64];
  for (const BenchRecord& r : records) {
    if (std::isnan(r.wall_ms)) {
      std::snprintf(buf, sizeof buf, "nan");
    } else {
      std::snprintf(buf, sizeof buf, "%.6f", r.wall_ms);
    }
    out += r.method + "," + std::to_string(r.L) + "," +
           std::to_string(r.d_model) + "," + std::to_string(r.H) + "," +
           std::to_string(r.E) + "," + std::to_string(r.d_e) + "," +
           std::to_string(r.d_h) + "," + std::to_string(r.block_seq) + "," +
           std::to_string(r.block_inter) + "," + buf + "," +
           std::to_string(r.peak_elements) + "," + r.status + "\n";
  }
  return out;
}

std::vector<BenchRecord> parse_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != kCsvHeader) {
    throw FileError("bench CSV: expected header '" + std::string(kCsvHeader) +
                    "'");
  }
  std::vector<BenchRecord> out;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty()) continue;
    const auto f = split_fields(line);
    if (f.size() != 12) {
      throw FileError("bench CSV row " + std::to_string(row) + ": expected 12 " +
                      "fields, got " + std::to_string(f.size()));
    }
    BenchRecord r;
    r.method = f[0];
    r.L = parse_size(f[1], row);
    r.d_model = parse_size(f[2], row);
    r.H = parse_size(f[3], row);
    r.E = parse_size(f[4], row);
    r.d_e = parse_size(f[5], row);
    r.d_h = parse_size(f[6], row);
    r.block_seq = parse_size(f[7], row);
    r.block_inter = parse_size(f[8], row);
    r.wall_ms = parse_double(f[9], row);
    r.peak_elements = parse_size(f[10], row);
    r.status = f[11];
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace flashmhf::bench
