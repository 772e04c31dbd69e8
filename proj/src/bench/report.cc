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

#include "flashmhf/bench/report.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include "flashmhf/errors.h"

namespace flashmhf::bench {

namespace {

bool same_shape(const BenchRecord& a, const BenchRecord& b) {
  return a.L == b.L && a.d_model == b.d_model && a.H == b.H && a.E == b.E &&
         a.d_e == b.d_e && a.d_h == b.d_h && a.block_seq == b.block_seq &&
         a.block_inter == b.block_inter;
}

std::string num(double v, const char* fmt) {
  if (std::isnan(v)) return "nan";
  char buf[64];
  std::snprintf(buf, sizeof buf, fmt, v);
  return buf;
}

}  // namespace

Report build_report(std::vector<BenchRecord> records) {
  // Round-trip through the CSV text so the ratios are computed from exactly
  // the values printed next to them.
  records = parse_csv(to_csv(records));
  std::stable_sort(records.begin(), records.end(),
                   [](const BenchRecord& a, const BenchRecord& b) {
                     if (a.method != b.method) return a.method < b.method;
                     return a.L < b.L;
                   });
  const double nan = std::numeric_limits<double>::quiet_NaN();

  Report rep;
  rep.csv = std::string(kReportCsvHeader) + "\n";
  rep.markdown =
      "# Benchmark report\n\n"
      "Ratios are method / flashmhf at identical dims and tiles.\n\n"
      "| method | L | d_model | H | E | d_e | d_h | block_seq | block_inter "
      "| wall_ms | peak_elements | status | peak_ratio | time_ratio |\n"
      "|---|---|---|---|---|---|---|---|---|---|---|---|---|---|\n";

  const std::string csv_rows = to_csv(records);
  std::istringstream raw(csv_rows);
  std::string line;
  std::getline(raw, line);  // header

  for (const BenchRecord& r : records) {
    std::getline(raw, line);
    double peak_ratio = nan, time_ratio = nan;
    const auto base = std::find_if(
        records.begin(), records.end(), [&](const BenchRecord& o) {
          return o.method == "flashmhf" && o.status != "OOM" && same_shape(o, r);
        });
    if (base != records.end() && r.status != "OOM") {
      peak_ratio = static_cast<double>(r.peak_elements) /
                   static_cast<double>(base->peak_elements);
      time_ratio = r.wall_ms / base->wall_ms;
    }
    rep.csv += line + "," + num(peak_ratio, "%.17g") + "," +
               num(time_ratio, "%.17g") + "\n";
    rep.markdown += "| " + r.method + " | " + std::to_string(r.L) + " | " +
                    std::to_string(r.d_model) + " | " + std::to_string(r.H) +
                    " | " + std::to_string(r.E) + " | " +
                    std::to_string(r.d_e) + " | " + std::to_string(r.d_h) +
                    " | " + std::to_string(r.block_seq) + " | " +
                    std::to_string(r.block_inter) + " | " +
                    num(r.wall_ms, "%.3f") + " | " +
                    std::to_string(r.peak_elements) + " | " + r.status + " | " +
                    num(peak_ratio, "%.3f") + " | " + num(time_ratio, "%.3f") +
                    " |\n";
  }
  return rep;
}

std::vector<BenchRecord> load_records(
    const std::vector<std::filesystem::path>& paths) {
  std::string missing;
  for (const auto& p : paths) {
    if (!std::filesystem::is_regular_file(p)) {
      missing += (missing.empty() ? "" : ", ") + p.string();
    }
  }
  if (!missing.empty()) throw FileError("missing record files: " + missing);

  std::vector<BenchRecord> out;
  for (const auto& p : paths) {
    std::ifstream f(p);
    std::ostringstream ss;
    ss << f.rdbuf();
    try {
      auto recs = parse_csv(ss.str());
      out.insert(out.end(), recs.begin(), recs.end());
    } catch (const FileError& e) {
      throw FileError(p.string() + ": " + e.what());
    }
  }
  return out;
}

}  // namespace flashmhf::bench
