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

#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "edgekt/detection.hpp"
#include "edgekt/energy.hpp"
#include "edgekt/runtime.hpp"
#include "edgekt/scenegen.hpp"

namespace edgekt {

inline constexpr int kReportSchemaVersion = 1;

/// Named scenarios: shallow, deep, lt, nt-lan, nt-wifi, hybrid.
ScenarioConfig scenario_preset(std::string_view name);
bool is_scenario_preset(std::string_view name);
/// The five scenarios of the comparison table, in table order.
const std::vector<std::string>& comparison_scenarios();

/// Applies a JSON object of overrides (schema in README). Unknown keys and
/// mistyped values throw Errc::config.
void apply_config_json(ScenarioConfig& config, std::string_view json_text);
/// Every tunable of `config` as a JSON object, accepted by apply_config_json.
std::string scenario_to_json(const ScenarioConfig& config);

/// Seeds the selector and channel streams.
void set_seed(ScenarioConfig& config, std::uint64_t seed);

/// Extractor and general decoder fitted for `config`; fitted once per
/// configuration and cached for the process.
const StudentModel& pretrained_student(const ModelConfig& config);

struct FrameRecord {
  std::uint64_t frame_id = 0;
  double start_s = 0.0;
  double finish_s = 0.0;
  double inference_s = 0.0;
  double nms_s = 0.0;
  std::size_t candidates = 0;
  std::size_t detections = 0;
  std::uint64_t weights_version = 0;
  bool key_frame = false;
  MetricsReport metrics;

  friend bool operator==(const FrameRecord&, const FrameRecord&) = default;
};

struct RunReport {
  int schema_version = kReportSchemaVersion;
  std::string scenario;
  std::string mode;
  std::string stream;
  std::string precision;
  bool kfs = true;
  std::size_t frames = 0;
  MetricsReport metrics;
  double mean_inference_s = 0.0;
  double mean_training_s = 0.0;
  double total_joules = 0.0;
  double joules_per_frame = 0.0;
  double overall_score = 0.0;  // f1 / joules_per_frame
  std::array<double, kActivityCount> activity_joules{};
  std::array<double, kActivityCount> activity_seconds{};
  std::size_t jobs_dispatched = 0;
  std::size_t jobs_completed = 0;
  std::size_t jobs_failed = 0;
  std::size_t max_in_flight = 0;
  double transmit_s = 0.0;
  double receive_s = 0.0;
  std::size_t upload_bytes = 0;
  std::size_t download_bytes = 0;
  std::vector<std::uint64_t> key_frames;
  std::vector<std::uint64_t> weight_versions;
  std::vector<double> final_losses;
  std::vector<FrameRecord> trace;
  std::string config;  // compact JSON echo of the scenario config

  friend bool operator==(const RunReport&, const RunReport&) = default;
};

/// Runs one scenario over the script's stream. Metrics compare the student
/// against the oracle's decoded output on each frame. Config and script
/// errors are raised before any frame runs.
RunReport run_scenario(const ScenarioConfig& config, const SceneScript& script);

/// Runs every scenario of comparison_scenarios() with `overrides` applied.
std::vector<RunReport> compare_scenarios(const SceneScript& script,
                                         std::string_view overrides_json,
                                         std::uint64_t seed);

enum class ReportFormat { json, csv };

std::string report_to_json(const RunReport& report);
RunReport report_from_json(std::string_view text);
/// Header plus one row per frame.
std::string report_to_csv(const RunReport& report);
/// One row per scenario: energy per frame, inference time, F1, score.
std::string comparison_to_csv(const std::vector<RunReport>& reports);

/// Throws Errc::io when the file cannot be written.
void emit_report(const RunReport& report, ReportFormat format, const std::filesystem::path& path);
void write_text(const std::filesystem::path& path, std::string_view text);

}  // namespace edgekt
