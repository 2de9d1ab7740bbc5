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

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "edgekt/error.hpp"
#include "edgekt/harness.hpp"

using namespace edgekt;

namespace {

Errc code_of(auto&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected edgekt::Error");
  return Errc::invalid_argument;
}

SceneScript short_script() {
  SceneScript s = scene_preset("fixed_cam_default");
  s.duration_frames = 120;
  s.shift_schedule.clear();
  return s;
}

std::size_t count_lines(const std::string& s) { return std::count(s.begin(), s.end(), '\n'); }

}  // namespace

TEST_CASE("scenario presets") {
  CHECK(scenario_preset("shallow").mode == Mode::no_training);
  CHECK(scenario_preset("deep").mode == Mode::oracle_only);
  CHECK(scenario_preset("lt").mode == Mode::local_training);
  CHECK(scenario_preset("nt-lan").channel->bandwidth_bps == 100e6);
  CHECK(scenario_preset("nt-wifi").channel->bandwidth_bps == 13e6);
  CHECK(scenario_preset("hybrid").mode == Mode::hybrid);
  CHECK(comparison_scenarios() ==
        std::vector<std::string>{"shallow", "deep", "lt", "nt-wifi", "nt-lan"});
  CHECK_FALSE(is_scenario_preset("turbo"));
  CHECK(code_of([] { scenario_preset("turbo"); }) == Errc::config);
}

TEST_CASE("config JSON") {
  ScenarioConfig c = scenario_preset("nt-wifi");
  apply_config_json(c, R"({"precision": "half", "kfs": false,
                           "selector": {"sigma": 0.25, "kalman": {"q": 0.001}, "mapping": "single_trial"},
                           "adapt": {"steps": 7, "lr": 0.01},
                           "cost": {"edge_speedup": 4, "power": {"idle": 0.5}},
                           "channel": {"bandwidth_bps": 5e6, "outages": [{"start_s": 1, "end_s": 2}]}})");
  CHECK(c.precision == Precision::half);
  CHECK_FALSE(c.kfs_enabled);
  CHECK(c.selector.sigma == 0.25);
  CHECK(c.selector.kalman_q == 0.001);
  CHECK(c.selector.kalman_r == 1e-2);
  CHECK(c.selector.mapping == BinomialMapping::single_trial);
  CHECK(c.adapt.steps == 7);
  CHECK(c.adapt.adam.lr == 0.01);
  CHECK(c.cost.edge_speedup == 4.0);
  CHECK(c.cost.power[Activity::idle] == 0.5);
  CHECK(c.channel->bandwidth_bps == 5e6);
  CHECK(c.channel->jitter.kind == JitterSpec::Kind::lognormal);
  REQUIRE(c.channel->outages.size() == 1);

  ScenarioConfig back = scenario_preset("shallow");
  apply_config_json(back, scenario_to_json(c));
  CHECK(scenario_to_json(back) == scenario_to_json(c));

  ScenarioConfig d = scenario_preset("lt");
  CHECK(code_of([&] { apply_config_json(d, R"({"bogus": 1})"); }) == Errc::config);
  CHECK(code_of([&] { apply_config_json(d, R"({"adapt": {"steps": "many"}})"); }) == Errc::config);
  CHECK(code_of([&] { apply_config_json(d, R"({"cost": {"power": {"sleep": 1}}})"); }) == Errc::config);
  CHECK(code_of([&] { apply_config_json(d, "{"); }) == Errc::config);
  CHECK(code_of([&] { apply_config_json(d, R"({"mode": "psychic"})"); }) == Errc::config);

  ScenarioConfig seeded = scenario_preset("nt-lan");
  set_seed(seeded, 99);
  CHECK(seeded.selector.seed == 99);
  CHECK(seeded.channel->seed == 99);
}

TEST_CASE("run_scenario report invariants") {
  const SceneScript script = short_script();
  for (const char* name : {"shallow", "deep", "lt", "nt-lan", "nt-wifi", "hybrid"}) {
    CAPTURE(name);
    const RunReport r = run_scenario(scenario_preset(name), script);
    CHECK(r.schema_version == 1);
    CHECK(r.frames == 120);
    REQUIRE(r.trace.size() == 120);
    CHECK(r.overall_score == doctest::Approx(r.metrics.f1 / (r.total_joules / r.frames)));
    CHECK(r.joules_per_frame == doctest::Approx(r.total_joules / r.frames));
    double activity_total = 0.0;
    for (double j : r.activity_joules) {
      CHECK(j >= 0.0);
      activity_total += j;
    }
    CHECK(activity_total == doctest::Approx(r.total_joules).epsilon(1e-12));
    for (std::size_t i = 0; i < kActivityCount; ++i) {
      CHECK(r.activity_joules[i] ==
            doctest::Approx(r.activity_seconds[i] * PowerModel{}.watts[i]).epsilon(1e-12));
    }
    std::size_t tp = 0, fp = 0, fn = 0;
    for (const FrameRecord& f : r.trace) {
      tp += f.metrics.true_positives;
      fp += f.metrics.false_positives;
      fn += f.metrics.false_negatives;
    }
    CHECK(MetricsReport::from_counts(tp, fp, fn) == r.metrics);
    CHECK(r.max_in_flight <= 1);
    if (std::string(name) == "deep") CHECK(r.metrics.f1 == 1.0);
    if (std::string(name) == "shallow") CHECK(r.jobs_dispatched == 0);
  }
}

TEST_CASE("training improves on the shallow student") {
  const SceneScript script = scene_preset("fixed_cam_default");
  const RunReport shallow = run_scenario(scenario_preset("shallow"), script);
  const RunReport nt = run_scenario(scenario_preset("nt-lan"), script);
  const RunReport lt = run_scenario(scenario_preset("lt"), script);
  CHECK(nt.metrics.f1 > shallow.metrics.f1);
  CHECK(lt.metrics.f1 > shallow.metrics.f1);
}

TEST_CASE("report serialization") {
  const RunReport r = run_scenario(scenario_preset("nt-wifi"), short_script());
  const std::string json = report_to_json(r);
  CHECK(report_from_json(json) == r);
  CHECK(report_to_json(report_from_json(json)) == json);
  CHECK(json.find("\"schema_version\"") != std::string::npos);

  const std::string csv = report_to_csv(r);
  CHECK(count_lines(csv) == r.frames + 1);

  const std::string table = comparison_to_csv({r, r});
  CHECK(count_lines(table) == 3);
  CHECK(table.rfind("scenario,energy_j_per_frame", 0) == 0);

  const auto dir = std::filesystem::temp_directory_path() / "edgekt_harness_test";
  std::filesystem::create_directories(dir);
  emit_report(r, ReportFormat::json, dir / "r.json");
  std::ifstream in(dir / "r.json");
  std::stringstream ss;
  ss << in.rdbuf();
  CHECK(ss.str() == json);
  emit_report(r, ReportFormat::csv, dir / "r.csv");
  CHECK(std::filesystem::file_size(dir / "r.csv") == csv.size());
  CHECK(code_of([&] { emit_report(r, ReportFormat::json, dir / "missing" / "r.json"); }) == Errc::io);
  std::filesystem::remove_all(dir);

  CHECK(code_of([] { report_from_json("[]"); }) == Errc::config);
}

TEST_CASE("errors surface before any frame runs") {
  SceneScript bad = short_script();
  bad.duration_frames = 0;
  CHECK(code_of([&] { run_scenario(scenario_preset("lt"), bad); }) == Errc::config);
  SceneScript wrong = short_script();
  wrong.height = wrong.width = 96;
  CHECK(code_of([&] { run_scenario(scenario_preset("lt"), wrong); }) == Errc::config);
  ScenarioConfig c = scenario_preset("nt-lan");
  c.channel.reset();
  CHECK(code_of([&] { run_scenario(c, short_script()); }) == Errc::config);
}

TEST_CASE("compare_scenarios") {
  const auto reports = compare_scenarios(short_script(), R"({"adapt": {"steps": 5}})", 3);
  REQUIRE(reports.size() == 5);
  for (std::size_t i = 0; i < reports.size(); ++i) {
    CHECK(reports[i].scenario == comparison_scenarios()[i]);
    CHECK(reports[i].config.find("\"steps\":5") != std::string::npos);
  }
  CHECK(code_of([] { compare_scenarios(short_script(), R"({"nope": 0})", 1); }) == Errc::config);
}
