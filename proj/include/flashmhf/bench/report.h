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
#include <vector>

#include "flashmhf/bench/bench.h"

namespace flashmhf::bench {

struct Report {
  std::string markdown;
  // The input columns plus peak_ratio and time_ratio (method / flashmhf at
  // the same dims and tiles; "nan" when there is no comparable flashmhf row
  // or either side was not run).
  std::string csv;
};

inline constexpr const char* kReportCsvHeader =
    "method,L,d_model,H,E,d_e,d_h,block_seq,block_inter,wall_ms,"
    "peak_elements,status,peak_ratio,time_ratio";

// Rows sorted by (method, L), ties kept in input order.
Report build_report(std::vector<BenchRecord> records);

// Reads and concatenates bench CSVs. Every missing path is checked first and
// all of them are named in one FileError.
std::vector<BenchRecord> load_records(
    const std::vector<std::filesystem::path>& paths);

}  // namespace flashmhf::bench
