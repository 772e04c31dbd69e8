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

#include "flashmhf/bench/cli.h"

#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <string>
#include <vector>

#include "flashmhf/bench/bench.h"
#include "flashmhf/bench/check_suite.h"
#include "flashmhf/bench/report.h"
#include "flashmhf/bench/toy.h"
#include "flashmhf/errors.h"
#include "flashmhf/ffn_reference.h"
#include "flashmhf/param_io.h"

namespace flashmhf::bench {

namespace {

constexpr const char* kFooter = R"(
Config file (--config): one key=value per line, '#' starts a comment. Keys
are the long option names without the leading dashes, e.g.

  seed=7
  scale=16
  block-seq=32
  methods=[swiglu,flashmhf]

Options given on the command line override the file.

Outputs (under --out):
  check      check_report.txt
  bench      bench.csv
  train-toy  toy_log.csv, toy_summary.csv, flashmhf_student.fmhf
  report     report.md, report.csv

Exit status: 0 success, 1 check/assertion/divergence failure, 2 usage or
configuration error.)";

struct Options {
  std::uint64_t seed = 0;
  std::string precision = "double";
  int scale = 16;
  std::string out_dir = "flashmhf_out";
  std::string fault;

  std::size_t block_seq = 64;
  std::size_t block_inter = 64;
  std::size_t budget = BenchConfig{}.element_budget;
  int reps = 5;
  int warmups = 2;
  std::vector<std::string> methods;
  std::vector<std::size_t> seq_lens;

  ToyConfig toy;
  std::vector<std::string> inputs;
};

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw FileError("cannot open " + path.string() + " for writing");
  f << text;
  if (!f) throw FileError("write failed: " + path.string());
}

std::filesystem::path out_dir(const Options& o) {
  std::filesystem::path dir(o.out_dir);
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw FileError("cannot create output directory " + dir.string());
  return dir;
}

int cmd_check(const Options& o, std::ostream& out) {
  CheckOptions co;
  co.seed = o.seed;
  co.scale = o.scale;
  const auto results = run_check_suite(co);
  const std::string report = format_check_report(results);
  out << report;
  write_file(out_dir(o) / "check_report.txt", report);
  return all_passed(results) ? kExitOk : kExitFailure;
}

int cmd_bench(const Options& o, std::ostream& out, std::ostream& err) {
  BenchConfig bc;
  bc.scale = o.scale;
  bc.seed = o.seed;
  bc.precision = o.precision == "single" ? Precision::kSingle : Precision::kDouble;
  bc.tiles = TileSpec{o.block_seq, o.block_inter};
  bc.element_budget = o.budget;
  bc.reps = o.reps;
  bc.warmups = o.warmups;
  bc.seq_lens = o.seq_lens;
  if (!o.methods.empty()) {
    bc.methods.clear();
    for (const std::string& name : o.methods) {
      const auto m = parse_method(name);
      if (!m) throw ConfigError("unknown bench method '" + name + "'");
      bc.methods.push_back(*m);
    }
  }
  const auto records = run_bench(bc, &err);
  const auto path = out_dir(o) / "bench.csv";
  write_file(path, to_csv(records));
  std::size_t bad = 0;
  for (const BenchRecord& r : records) bad += r.status == "ledger_mismatch";
  out << "wrote " << records.size() << " records to " << path.string() << '\n';
  if (bad) {
    out << bad << " records have a ledger peak that differs from the closed form\n";
    return kExitFailure;
  }
  return kExitOk;
}

int cmd_train_toy(const Options& o, std::ostream& out, std::ostream& err) {
  if (o.precision != "double") {
    throw ConfigError("train-toy runs in double precision only");
  }
  ToyConfig tc = o.toy;
  tc.seed = o.seed;
  if (!o.methods.empty()) tc.methods = o.methods;
  const ToyRun run = train_toy(tc, &err);

  const auto dir = out_dir(o);
  std::string log = "method,step,train_mse\n", summary =
      "method,parameter_count,initial_eval_mse,final_eval_mse,diverged\n";
  char buf[64];
  bool diverged = false;
  for (const ToyMethodResult& r : run.results) {
    for (std::size_t s = 0; s < r.train_mse.size(); ++s) {
      std::snprintf(buf, sizeof buf, "%.10e", r.train_mse[s]);
      log += r.method + "," + std::to_string(s + 1) + "," + buf + "\n";
    }
    char line[256];
    std::snprintf(line, sizeof line, "%s,%zu,%.10e,%.10e,%s\n", r.method.c_str(),
                  r.parameter_count, r.initial_eval_mse, r.final_eval_mse,
                  r.diverged ? "true" : "false");
    summary += line;
    std::snprintf(line, sizeof line,
                  "%-12s params=%zu eval_mse %.6g -> %.6g (ratio %.4f)%s\n",
                  r.method.c_str(), r.parameter_count, r.initial_eval_mse,
                  r.final_eval_mse, r.final_eval_mse / r.initial_eval_mse,
                  r.diverged ? " DIVERGED" : "");
    out << line;
    diverged = diverged || r.diverged;
  }
  write_file(dir / "toy_log.csv", log);
  write_file(dir / "toy_summary.csv", summary);
  if (run.flash_params) {
    write_container(dir / "flashmhf_student.fmhf", to_container(*run.flash_params));
  }
  return diverged ? kExitFailure : kExitOk;
}

int cmd_report(const Options& o, std::ostream& out) {
  std::vector<std::filesystem::path> paths(o.inputs.begin(), o.inputs.end());
  const Report rep = build_report(load_records(paths));
  const auto dir = out_dir(o);
  write_file(dir / "report.md", rep.markdown);
  write_file(dir / "report.csv", rep.csv);
  out << rep.markdown;
  return kExitOk;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out,
            std::ostream& err) {
  CLI::App app{"FlashMHF reference implementation: property checks, memory and "
               "throughput sweeps, toy training and reports."};
  app.footer(kFooter);
  app.set_config("--config", "", "Flat key=value config file");
  app.require_subcommand(1, 1);

  Options o;
  app.add_option("--seed", o.seed, "Seed for every random draw")
      ->capture_default_str();
  app.add_option("--precision", o.precision, "Bench forward precision")
      ->check(CLI::IsMember({"single", "double"}))
      ->capture_default_str();
  app.add_option("--scale", o.scale, "Divisor applied to L and widths of the "
                                     "efficiency grid")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  app.add_option("--out", o.out_dir, "Output directory")->capture_default_str();
  app.add_option("--inject-fault", o.fault)
      ->check(CLI::IsMember({"dsilu"}))
      ->group("");

  const std::string bench_group = "bench";
  app.add_option("--block-seq", o.block_seq, "Sequence tile extent")
      ->check(CLI::PositiveNumber)
      ->capture_default_str()
      ->group(bench_group);
  app.add_option("--block-inter", o.block_inter, "Intermediate tile extent")
      ->check(CLI::PositiveNumber)
      ->capture_default_str()
      ->group(bench_group);
  app.add_option("--budget", o.budget,
                 "Peak-element budget; larger configurations are reported OOM")
      ->capture_default_str()
      ->group(bench_group);
  app.add_option("--reps", o.reps, "Timed repetitions per cell")
      ->check(CLI::PositiveNumber)
      ->capture_default_str()
      ->group(bench_group);
  app.add_option("--warmups", o.warmups, "Untimed runs per cell")
      ->check(CLI::PositiveNumber)
      ->capture_default_str()
      ->group(bench_group);
  app.add_option("--seq-lens", o.seq_lens,
                 "Sequence lengths to run instead of the scaled grid")
      ->delimiter(',')
      ->group(bench_group);
  app.add_option("--methods", o.methods,
                 "Methods to run (bench: swiglu,naive_mhffn,flashmhf; "
                 "train-toy: also pkv)")
      ->delimiter(',');

  const std::string toy_group = "train-toy";
  ToyConfig& t = o.toy;
  app.add_option("--steps", t.steps, "Adam steps per student")
      ->capture_default_str()
      ->group(toy_group);
  app.add_option("--tokens", t.tokens, "Dataset size in tokens")
      ->capture_default_str()
      ->group(toy_group);
  app.add_option("--seq-len", t.seq_len, "Tokens per training sequence")
      ->check(CLI::PositiveNumber)
      ->capture_default_str()
      ->group(toy_group);
  app.add_option("--d-model", t.d_model, "Model width")
      ->check(CLI::PositiveNumber)
      ->capture_default_str()
      ->group(toy_group);
  app.add_option("--heads", t.heads, "Heads of the multi-head students")
      ->check(CLI::PositiveNumber)
      ->capture_default_str()
      ->group(toy_group);
  app.add_option("--flash-e", t.flash_E, "FlashMHF sub-networks per head")
      ->check(CLI::PositiveNumber)
      ->capture_default_str()
      ->group(toy_group);
  app.add_option("--teacher-d-ff", t.teacher_d_ff, "Teacher intermediate width")
      ->check(CLI::PositiveNumber)
      ->capture_default_str()
      ->group(toy_group);
  app.add_option("--lr", t.lr, "Adam learning rate")
      ->capture_default_str()
      ->group(toy_group);

  app.fallthrough();
  CLI::App* check = app.add_subcommand("check", "Run the property suite");
  CLI::App* bench = app.add_subcommand("bench", "Memory and wall-time sweep");
  CLI::App* toy = app.add_subcommand("train-toy", "Toy teacher-student training");
  CLI::App* report = app.add_subcommand("report", "Merge bench CSVs");
  report->add_option("inputs", o.inputs, "Bench CSV files");
  for (CLI::App* sub : {check, bench, toy, report}) {
    sub->footer("Options are shared by all commands; see the top-level --help.");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\nRun with --help for usage.\n";
    return kExitUsage;
  }

  fault::set_dsilu_corruption(o.fault == "dsilu");
  try {
    int status = kExitOk;
    if (*check) status = cmd_check(o, out);
    if (*bench) status = cmd_bench(o, out, err);
    if (*toy) status = cmd_train_toy(o, out, err);
    if (*report) status = cmd_report(o, out);
    fault::set_dsilu_corruption(false);
    return status;
  } catch (const Error& e) {
    fault::set_dsilu_corruption(false);
    err << "error: " << e.what() << '\n';
    const bool input_error = dynamic_cast<const ConfigError*>(&e) ||
                             dynamic_cast<const FileError*>(&e) ||
                             dynamic_cast<const LayoutError*>(&e) ||
                             dynamic_cast<const DimensionError*>(&e);
    return input_error ? kExitUsage : kExitFailure;
  }
}

}  // namespace flashmhf::bench
