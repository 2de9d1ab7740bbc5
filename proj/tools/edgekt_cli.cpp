// Copyright 2026 The edgekt Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// edgekt command line: single scenario runs and the five-way comparison.

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "edgekt/edgekt.h"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitConfig = 2;

struct Failure {
  ekt_status status;
  std::string message;
};

void check(ekt_status status, const char* what) {
  if (status != EKT_OK) {
    throw Failure{status, std::string(what) + " failed (" + ekt_status_name(status) +
                              "): " + ekt_last_error()};
  }
}

template <typename T, void (*Destroy)(T*)>
struct Deleter {
  void operator()(T* p) const { Destroy(p); }
};
using Scenario = std::unique_ptr<ekt_scenario, Deleter<ekt_scenario, ekt_scenario_destroy>>;
using Stream = std::unique_ptr<ekt_stream, Deleter<ekt_stream, ekt_stream_destroy>>;
using Report = std::unique_ptr<ekt_report, Deleter<ekt_report, ekt_report_destroy>>;
using Comparison =
    std::unique_ptr<ekt_comparison, Deleter<ekt_comparison, ekt_comparison_destroy>>;

// --config takes inline JSON or a path to a JSON file.
std::string config_text(const std::string& arg) {
  if (arg.empty() || arg.front() == '{') return arg;
  std::ifstream in(arg);
  if (!in) throw Failure{EKT_CONFIG, "cannot read config file '" + arg + "'"};
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Stream open_stream(const std::string& arg) {
  ekt_stream* s = nullptr;
  check(ekt_stream_open(arg.c_str(), &s), "stream");
  return Stream(s);
}

std::string format_for(const std::string& path, const std::string& requested) {
  if (!requested.empty()) return requested;
  const auto dot = path.rfind('.');
  if (dot != std::string::npos && path.substr(dot) == ".csv") return "csv";
  return "json";
}

void print_summary(const char* name, const ekt_summary& s) {
  std::printf("%-10s frames=%zu keys=%zu f1=%.4f recall=%.4f J/frame=%.4f inference=%.4fs score=%.4f\n",
              name, s.frames, s.key_frames, s.f1, s.recall, s.joules_per_frame,
              s.mean_inference_s, s.overall_score);
}

struct RunArgs {
  std::string scenario;
  std::string stream = "fixed_cam_default";
  std::string precision;
  std::string kfs;
  std::optional<std::uint64_t> seed;
  std::string config;
  std::string out;
  std::string format;
  bool quiet = false;
};

struct CompareArgs {
  std::string stream = "fixed_cam_default";
  std::uint64_t seed = 1;
  std::string config;
  std::string out;
  bool quiet = false;
};

int do_run(const RunArgs& a) {
  ekt_scenario* raw = nullptr;
  check(ekt_scenario_preset(a.scenario.c_str(), &raw), "scenario");
  Scenario scenario(raw);
  const std::string overrides = config_text(a.config);
  if (!overrides.empty()) check(ekt_scenario_apply_json(scenario.get(), overrides.c_str()), "config");
  if (!a.precision.empty()) {
    check(ekt_scenario_set_precision(scenario.get(), a.precision.c_str()), "precision");
  }
  if (!a.kfs.empty()) check(ekt_scenario_set_kfs(scenario.get(), a.kfs == "on"), "kfs");
  if (a.seed) check(ekt_scenario_set_seed(scenario.get(), *a.seed), "seed");
  Stream stream = open_stream(a.stream);

  ekt_report* rep = nullptr;
  check(ekt_run(scenario.get(), stream.get(), &rep), "run");
  Report report(rep);
  if (!a.out.empty()) {
    check(ekt_report_write(report.get(), format_for(a.out, a.format).c_str(), a.out.c_str()),
          "write");
  }
  if (!a.quiet) {
    ekt_summary s{};
    check(ekt_report_summary(report.get(), &s), "summary");
    print_summary(a.scenario.c_str(), s);
  }
  return kExitOk;
}

int do_compare(const CompareArgs& a) {
  Stream stream = open_stream(a.stream);
  const std::string overrides = config_text(a.config);
  ekt_comparison* raw = nullptr;
  check(ekt_compare(stream.get(), overrides.empty() ? nullptr : overrides.c_str(), a.seed, &raw),
        "compare");
  Comparison cmp(raw);
  if (!a.out.empty()) check(ekt_comparison_write_csv(cmp.get(), a.out.c_str()), "write");
  if (!a.quiet) {
    for (std::size_t i = 0; i < ekt_comparison_size(cmp.get()); ++i) {
      ekt_summary s{};
      check(ekt_comparison_summary(cmp.get(), i, &s), "summary");
      print_summary(ekt_comparison_name(cmp.get(), i), s);
    }
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"edgekt: edge knowledge transfer simulator"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(ekt_version()));

  RunArgs run;
  auto* run_cmd = app.add_subcommand("run", "Run one scenario over a scene stream");
  run_cmd->add_option("--scenario", run.scenario, "Scenario preset")
      ->required()
      ->check(CLI::IsMember({"shallow", "deep", "lt", "nt-lan", "nt-wifi", "hybrid"}));
  run_cmd->add_option("--stream", run.stream, "Scene preset name or script JSON path")
      ->capture_default_str();
  run_cmd->add_option("--precision", run.precision, "Transfer precision")
      ->check(CLI::IsMember({"full", "half"}));
  run_cmd->add_option("--kfs", run.kfs, "Key-frame selection")->check(CLI::IsMember({"on", "off"}));
  run_cmd->add_option("--seed", run.seed, "Seed for the selector and channel streams");
  run_cmd->add_option("--config", run.config, "Config overrides: inline JSON or file path");
  run_cmd->add_option("--out", run.out, "Report path");
  run_cmd->add_option("--format", run.format, "Report format (default from --out extension)")
      ->check(CLI::IsMember({"json", "csv"}));
  run_cmd->add_flag("-q,--quiet", run.quiet, "Do not print the summary line");

  CompareArgs cmp;
  auto* cmp_cmd = app.add_subcommand("compare", "Run the five comparison scenarios");
  cmp_cmd->add_option("--stream", cmp.stream, "Scene preset name or script JSON path")
      ->capture_default_str();
  cmp_cmd->add_option("--seed", cmp.seed, "Seed for every scenario")->capture_default_str();
  cmp_cmd->add_option("--config", cmp.config, "Overrides applied to every scenario");
  cmp_cmd->add_option("--out", cmp.out, "CSV table path");
  cmp_cmd->add_flag("-q,--quiet", cmp.quiet, "Do not print the table");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (*run_cmd) return do_run(run);
    return do_compare(cmp);
  } catch (const Failure& f) {
    std::fprintf(stderr, "edgekt: %s\n", f.message.c_str());
    return f.status == EKT_CONFIG ? kExitConfig : kExitFailure;
  }
}
