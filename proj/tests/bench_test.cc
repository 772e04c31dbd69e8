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

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "flashmhf/bench/bench.h"
#include "flashmhf/bench/check_suite.h"
#include "flashmhf/bench/report.h"
#include "flashmhf/bench/toy.h"
#include "flashmhf/errors.h"
#include "flashmhf/grad.h"
#include "flashmhf/ops.h"
#include "test_util.h"

namespace flashmhf::bench {
namespace {

using flashmhf::testing::randn;

TEST(Grid, ScaledEfficiencyTableShapes) {
  const BenchGrid g = scaled_grid(16);
  EXPECT_EQ(g.seq_lens,
            (std::vector<std::size_t>{12, 24, 48, 96, 120, 180, 252, 504, 1008}));
  EXPECT_EQ(g.H, 16u);
  EXPECT_EQ(g.E, 22u);
  EXPECT_EQ(g.d_e, 24u);
  EXPECT_EQ(g.d_h, 8u);
  EXPECT_EQ(g.swiglu_d_ff, 344u);
  const BenchGrid full = scaled_grid(1);
  EXPECT_EQ(full.seq_lens.back(), 16128u);
  EXPECT_EQ(full.d_model(), 2048u);
  EXPECT_THROW(scaled_grid(0), ConfigError);
}

TEST(Bench, FlashPeakFlatInSubnetsWhileNaiveGrows) {
  BenchGrid g = scaled_grid(64);
  const TileSpec t{16, 16};
  std::size_t flash = 0, naive = 0;
  for (std::size_t E : {2, 5, 11}) {
    g.E = E;
    const std::size_t f = measure_peak(Method::kFlashMHF, 20, g, t, 0);
    const std::size_t n = measure_peak(Method::kNaiveMHFFN, 20, g, t, 0);
    EXPECT_EQ(f, closed_form_peak(Method::kFlashMHF, 20, g, t));
    EXPECT_EQ(n, closed_form_peak(Method::kNaiveMHFFN, 20, g, t));
    if (flash) {
      EXPECT_EQ(f, flash);
      EXPECT_GT(n, naive);
    }
    flash = f;
    naive = n;
  }
}

TEST(Bench, RecordsAndBudget) {
  BenchConfig c;
  c.scale = 64;
  c.seq_lens = {3, 9};
  c.reps = 5;
  c.warmups = 2;
  c.tiles = TileSpec{4, 4};
  const BenchGrid g = scaled_grid(64);
  c.element_budget = closed_form_peak(Method::kNaiveMHFFN, 3, g, c.tiles);
  const auto recs = run_bench(c);
  ASSERT_EQ(recs.size(), 6u);
  for (const BenchRecord& r : recs) {
    const bool over = r.method == "naive_mhffn" && r.L == 9;
    EXPECT_EQ(r.status, over ? "OOM" : "ok") << r.method << " " << r.L;
    if (!over) {
      EXPECT_GT(r.wall_ms, 0.0);
    }
    EXPECT_EQ(r.peak_elements,
              closed_form_peak(*parse_method(r.method), r.L, g, c.tiles));
  }
}

TEST(Csv, DocumentedColumnOrderAndRoundTrip) {
  BenchRecord a{"flashmhf", 12, 128, 16, 22, 24, 8, 64, 64, 1.25, 10240, "ok"};
  BenchRecord b{"naive_mhffn", 1008, 128, 16, 22, 24, 8, 64, 64,
                std::nan(""), 9709056, "OOM"};
  const std::string csv = to_csv({a, b});
  EXPECT_EQ(csv,
            "method,L,d_model,H,E,d_e,d_h,block_seq,block_inter,wall_ms,"
            "peak_elements,status\n"
            "flashmhf,12,128,16,22,24,8,64,64,1.250000,10240,ok\n"
            "naive_mhffn,1008,128,16,22,24,8,64,64,nan,9709056,OOM\n");
  const auto back = parse_csv(csv);
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back[0], a);
  EXPECT_TRUE(std::isnan(back[1].wall_ms));
  EXPECT_EQ(back[1].peak_elements, b.peak_elements);
}

TEST(Csv, RejectsMalformedInput) {
  EXPECT_THROW(parse_csv("method,L\n"), FileError);
  const std::string head = std::string(kCsvHeader) + "\n";
  EXPECT_THROW(parse_csv(head + "x,1,2\n"), FileError);
  EXPECT_THROW(parse_csv(head + "x,1,2,3,4,5,6,7,8,fast,10,ok\n"), FileError);
  EXPECT_THROW(parse_csv(head + "x,-1,2,3,4,5,6,7,8,1.0,10,ok\n"), FileError);
}

std::vector<BenchRecord> sample_records() {
  return {
      {"swiglu", 24, 128, 16, 22, 24, 8, 64, 64, 1.7, 27840, "ok"},
      {"flashmhf", 24, 128, 16, 22, 24, 8, 64, 64, 6.7, 11776, "ok"},
      {"swiglu", 12, 128, 16, 22, 24, 8, 64, 64, 0.8, 13920, "ok"},
      {"flashmhf", 12, 128, 16, 22, 24, 8, 64, 64, 3.1, 10240, "ok"},
      {"naive_mhffn", 12, 128, 16, 22, 24, 8, 64, 64, std::nan(""), 115584, "OOM"},
  };
}

TEST(Report, SortedByMethodThenLength) {
  const Report r = build_report(sample_records());
  const auto rows = parse_csv([&] {
    // Drop the two ratio columns to reuse the bench parser.
    std::istringstream in(r.csv);
    std::string line, out;
    std::getline(in, line);
    out = std::string(kCsvHeader) + "\n";
    while (std::getline(in, line)) {
      auto cut = line.rfind(',');
      cut = line.rfind(',', cut - 1);
      out += line.substr(0, cut) + "\n";
    }
    return out;
  }());
  ASSERT_EQ(rows.size(), 5u);
  EXPECT_EQ(rows[0].method, "flashmhf");
  EXPECT_EQ(rows[0].L, 12u);
  EXPECT_EQ(rows[1].L, 24u);
  EXPECT_EQ(rows[2].method, "naive_mhffn");
  EXPECT_EQ(rows[3].method, "swiglu");
  EXPECT_EQ(rows[4].L, 24u);
}

TEST(Report, RatiosAgreeWithRawColumns) {
  const Report r = build_report(sample_records());
  std::istringstream in(r.csv);
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, kReportCsvHeader);
  std::map<std::size_t, std::pair<double, double>> flash;
  std::vector<std::vector<std::string>> rows;
  while (std::getline(in, line)) {
    std::vector<std::string> f;
    std::string field;
    std::istringstream ss(line);
    while (std::getline(ss, field, ',')) f.push_back(field);
    ASSERT_EQ(f.size(), 14u);
    if (f[0] == "flashmhf")
      flash[std::stoul(f[1])] = {std::stod(f[9]), std::stod(f[10])};
    rows.push_back(f);
  }
  for (const auto& f : rows) {
    if (f[11] == "OOM") {
      EXPECT_EQ(f[12], "nan");
      continue;
    }
    const auto& base = flash.at(std::stoul(f[1]));
    EXPECT_NEAR(std::stod(f[12]), std::stod(f[10]) / base.second, 1e-12);
    EXPECT_NEAR(std::stod(f[13]), std::stod(f[9]) / base.first, 1e-12);
  }
}

TEST(Report, EmptyInputHasHeaders) {
  const Report r = build_report({});
  EXPECT_EQ(r.csv, std::string(kReportCsvHeader) + "\n");
  EXPECT_NE(r.markdown.find("| method | L |"), std::string::npos);
}

TEST(Report, MissingFilesAreAllListed) {
  const auto dir = std::filesystem::temp_directory_path();
  const auto present = dir / "flashmhf_report_present.csv";
  std::ofstream(present) << kCsvHeader << "\n";
  try {
    load_records({dir / "nope_a.csv", present, dir / "nope_b.csv"});
    FAIL() << "expected FileError";
  } catch (const FileError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("nope_a.csv"), std::string::npos);
    EXPECT_NE(msg.find("nope_b.csv"), std::string::npos);
  }
  EXPECT_TRUE(load_records({present}).empty());
  std::filesystem::remove(present);
}

ToyConfig small_toy() {
  ToyConfig c;
  c.d_model = 8;
  c.heads = 2;
  c.seq_len = 8;
  c.tokens = 160;
  c.steps = 40;
  return c;
}

TEST(Toy, StudentsMatchedWithinFivePercent) {
  for (ToyConfig c : {ToyConfig{}, small_toy()}) {
    const double target =
        static_cast<double>(make_student("flashmhf", c)->parameter_count());
    for (const char* m : {"swiglu", "naive_mhffn", "pkv"}) {
      const double n = static_cast<double>(make_student(m, c)->parameter_count());
      EXPECT_LT(std::abs(n - target) / target, 0.05) << m;
    }
  }
  EXPECT_THROW(make_student("moe", small_toy()), ConfigError);
}

TEST(Toy, StudentGradientsMatchFiniteDifferences) {
  const ToyConfig c = small_toy();
  const TensorD x = randn({5, c.d_model}, 1, "x");
  const TensorD w = randn({5, c.d_model}, 1, "w");
  for (const char* m : {"flashmhf", "swiglu", "naive_mhffn", "pkv"}) {
    auto s = make_student(m, c);
    s->forward(x);
    s->backward(x, w);
    const auto params = s->params();
    const auto grads = s->grads();
    ASSERT_EQ(params.size(), grads.size());
    for (std::size_t i = 0; i < params.size(); ++i) {
      const TensorD analytic = *grads[i];
      const TensorD original = *params[i];
      const TensorD fd = finite_diff(
          [&](const TensorD& a) {
            *params[i] = a;
            return mul(s->forward(x), w);
          },
          original, 1e-5);
      *params[i] = original;
      EXPECT_LT(max_rel_error(analytic, fd), 1e-7) << m << " param " << i;
    }
  }
}

TEST(Toy, TrainingReducesLossAndIsDeterministic) {
  ToyConfig c = small_toy();
  c.steps = 60;
  c.lr = 3e-3;
  const ToyRun a = train_toy(c);
  const ToyRun b = train_toy(c);
  ASSERT_EQ(a.results.size(), 4u);
  for (std::size_t i = 0; i < 4; ++i) {
    const ToyMethodResult& r = a.results[i];
    EXPECT_FALSE(r.diverged) << r.method;
    EXPECT_EQ(r.train_mse.size(), c.steps);
    EXPECT_LT(r.final_eval_mse, r.initial_eval_mse) << r.method;
    EXPECT_EQ(r.train_mse, b.results[i].train_mse);
  }
  ASSERT_TRUE(a.flash_params);
  EXPECT_NO_THROW(a.flash_params->check(a.flash_dims));
}

TEST(Toy, DivergenceIsFlagged) {
  ToyConfig c = small_toy();
  c.methods = {"swiglu"};
  c.lr = 50.0;
  const ToyRun r = train_toy(c);
  EXPECT_TRUE(r.results[0].diverged);
  EXPECT_LT(r.results[0].train_mse.size(), c.steps);
}

TEST(Toy, RejectsTooFewTokens) {
  ToyConfig c = small_toy();
  c.tokens = 10;
  EXPECT_THROW(train_toy(c), ConfigError);
}

TEST(CheckSuite, ReportFormat) {
  const std::string s = format_check_report(
      {{"a", true, "fine"}, {"b", false, "broken"}});
  EXPECT_EQ(s, "PASS a: fine\nFAIL b: broken\n1/2 checks passed\n");
  EXPECT_FALSE(all_passed({{"a", true, ""}, {"b", false, ""}}));
}

TEST(CheckSuite, SizingRuleCheckPasses) {
  EXPECT_TRUE(check_sizing_rule().passed);
}

}  // namespace
}  // namespace flashmhf::bench
