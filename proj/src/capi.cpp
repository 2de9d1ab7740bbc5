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

#include "edgekt/edgekt.h"

#include <cstdlib>
#include <cstring>
#include <exception>
#include <new>
#include <string>
#include <vector>

#include "edgekt/error.hpp"
#include "edgekt/harness.hpp"
#include "log.hpp"

struct ekt_scenario {
  edgekt::ScenarioConfig config;
};

struct ekt_stream {
  edgekt::SceneScript script;
};

struct ekt_report {
  edgekt::RunReport report;
};

struct ekt_comparison {
  std::vector<edgekt::RunReport> reports;
};

namespace {

thread_local std::string last_error;

ekt_status status_of(edgekt::Errc code) noexcept {
  using edgekt::Errc;
  switch (code) {
    case Errc::invalid_argument:
    case Errc::out_of_range:
    case Errc::stale_version:
      return EKT_INVALID_ARGUMENT;
    case Errc::shape_mismatch: return EKT_SHAPE;
    case Errc::non_finite:
    case Errc::overflow:
      return EKT_NUMERIC;
    case Errc::bad_magic:
    case Errc::truncated:
    case Errc::unknown_type:
    case Errc::channel_outage:
      return EKT_PROTOCOL;
    case Errc::config: return EKT_CONFIG;
    case Errc::io: return EKT_IO;
  }
  return EKT_INTERNAL;
}

ekt_status fail(ekt_status status, std::string message) {
  last_error = std::move(message);
  edgekt::detail::log(edgekt::detail::LogLevel::debug,
                      std::string(ekt_status_name(status)) + ": " + last_error);
  return status;
}

// Runs `f`, translating exceptions into a status and the thread's message.
template <typename F>
ekt_status guarded(F&& f) noexcept {
  last_error.clear();
  try {
    f();
    return EKT_OK;
  } catch (const edgekt::Error& e) {
    return fail(status_of(e.code()), e.what());
  } catch (const std::bad_alloc&) {
    return fail(EKT_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return fail(EKT_INTERNAL, e.what());
  } catch (...) {
    return fail(EKT_INTERNAL, "unknown exception");
  }
}

char* copy_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

void require(bool ok, const char* what) {
  if (!ok) throw edgekt::Error(edgekt::Errc::invalid_argument, what);
}

void fill_summary(const edgekt::RunReport& r, ekt_summary* out) {
  out->frames = r.frames;
  out->key_frames = r.key_frames.size();
  out->precision = r.metrics.precision;
  out->recall = r.metrics.recall;
  out->f1 = r.metrics.f1;
  out->joules_per_frame = r.joules_per_frame;
  out->total_joules = r.total_joules;
  out->mean_inference_s = r.mean_inference_s;
  out->mean_training_s = r.mean_training_s;
  out->overall_score = r.overall_score;
}

}  // namespace

extern "C" {

const char* ekt_version(void) { return "0.1.0"; }

const char* ekt_status_name(ekt_status status) {
  switch (status) {
    case EKT_OK: return "ok";
    case EKT_INVALID_ARGUMENT: return "invalid argument";
    case EKT_CONFIG: return "config error";
    case EKT_IO: return "i/o error";
    case EKT_SHAPE: return "shape mismatch";
    case EKT_NUMERIC: return "numeric error";
    case EKT_PROTOCOL: return "protocol error";
    case EKT_INTERNAL: return "internal error";
  }
  return "unknown status";
}

const char* ekt_last_error(void) { return last_error.c_str(); }

void ekt_string_free(char* text) { std::free(text); }

ekt_status ekt_scenario_preset(const char* name, ekt_scenario** out) {
  return guarded([&] {
    require(name && out, "ekt_scenario_preset: null argument");
    *out = nullptr;
    *out = new ekt_scenario{edgekt::scenario_preset(name)};
  });
}

void ekt_scenario_destroy(ekt_scenario* scenario) { delete scenario; }

ekt_status ekt_scenario_apply_json(ekt_scenario* scenario, const char* json) {
  return guarded([&] {
    require(scenario && json, "ekt_scenario_apply_json: null argument");
    edgekt::ScenarioConfig next = scenario->config;
    edgekt::apply_config_json(next, json);
    next.validate();
    scenario->config = std::move(next);
  });
}

ekt_status ekt_scenario_set_precision(ekt_scenario* scenario, const char* precision) {
  return guarded([&] {
    require(scenario && precision, "ekt_scenario_set_precision: null argument");
    const std::string p = precision;
    if (p == "full") {
      scenario->config.precision = edgekt::Precision::full;
    } else if (p == "half") {
      scenario->config.precision = edgekt::Precision::half;
    } else {
      throw edgekt::Error(edgekt::Errc::config, "precision must be full or half");
    }
  });
}

ekt_status ekt_scenario_set_kfs(ekt_scenario* scenario, int enabled) {
  return guarded([&] {
    require(scenario, "ekt_scenario_set_kfs: null scenario");
    scenario->config.kfs_enabled = enabled != 0;
  });
}

ekt_status ekt_scenario_set_seed(ekt_scenario* scenario, uint64_t seed) {
  return guarded([&] {
    require(scenario, "ekt_scenario_set_seed: null scenario");
    edgekt::set_seed(scenario->config, seed);
  });
}

ekt_status ekt_scenario_to_json(const ekt_scenario* scenario, char** out_json) {
  return guarded([&] {
    require(scenario && out_json, "ekt_scenario_to_json: null argument");
    *out_json = copy_string(edgekt::scenario_to_json(scenario->config));
  });
}

ekt_status ekt_stream_open(const char* preset_or_path, ekt_stream** out) {
  return guarded([&] {
    require(preset_or_path && out, "ekt_stream_open: null argument");
    *out = nullptr;
    const std::string arg = preset_or_path;
    edgekt::SceneScript script = edgekt::is_scene_preset(arg) ? edgekt::scene_preset(arg)
                                                             : edgekt::load_script(arg);
    *out = new ekt_stream{std::move(script)};
  });
}

void ekt_stream_destroy(ekt_stream* stream) { delete stream; }

size_t ekt_stream_frames(const ekt_stream* stream) {
  return stream ? stream->script.duration_frames : 0;
}

ekt_status ekt_run(const ekt_scenario* scenario, const ekt_stream* stream, ekt_report** out) {
  return guarded([&] {
    require(scenario && stream && out, "ekt_run: null argument");
    *out = nullptr;
    *out = new ekt_report{edgekt::run_scenario(scenario->config, stream->script)};
  });
}

void ekt_report_destroy(ekt_report* report) { delete report; }

ekt_status ekt_report_summary(const ekt_report* report, ekt_summary* out) {
  return guarded([&] {
    require(report && out, "ekt_report_summary: null argument");
    fill_summary(report->report, out);
  });
}

ekt_status ekt_report_to_json(const ekt_report* report, char** out_json) {
  return guarded([&] {
    require(report && out_json, "ekt_report_to_json: null argument");
    *out_json = copy_string(edgekt::report_to_json(report->report));
  });
}

ekt_status ekt_report_write(const ekt_report* report, const char* format, const char* path) {
  return guarded([&] {
    require(report && format && path, "ekt_report_write: null argument");
    const std::string f = format;
    if (f != "json" && f != "csv") {
      throw edgekt::Error(edgekt::Errc::config, "report format must be json or csv");
    }
    edgekt::emit_report(report->report,
                        f == "json" ? edgekt::ReportFormat::json : edgekt::ReportFormat::csv, path);
  });
}

ekt_status ekt_compare(const ekt_stream* stream, const char* overrides_json, uint64_t seed,
                       ekt_comparison** out) {
  return guarded([&] {
    require(stream && out, "ekt_compare: null argument");
    *out = nullptr;
    auto reports =
        edgekt::compare_scenarios(stream->script, overrides_json ? overrides_json : "", seed);
    *out = new ekt_comparison{std::move(reports)};
  });
}

void ekt_comparison_destroy(ekt_comparison* comparison) { delete comparison; }

size_t ekt_comparison_size(const ekt_comparison* comparison) {
  return comparison ? comparison->reports.size() : 0;
}

const char* ekt_comparison_name(const ekt_comparison* comparison, size_t index) {
  if (!comparison || index >= comparison->reports.size()) return nullptr;
  return comparison->reports[index].scenario.c_str();
}

ekt_status ekt_comparison_summary(const ekt_comparison* comparison, size_t index,
                                  ekt_summary* out) {
  return guarded([&] {
    require(comparison && out, "ekt_comparison_summary: null argument");
    require(index < comparison->reports.size(), "ekt_comparison_summary: index out of range");
    fill_summary(comparison->reports[index], out);
  });
}

ekt_status ekt_comparison_write_csv(const ekt_comparison* comparison, const char* path) {
  return guarded([&] {
    require(comparison && path, "ekt_comparison_write_csv: null argument");
    edgekt::write_text(path, edgekt::comparison_to_csv(comparison->reports));
  });
}

}  // extern "C"
