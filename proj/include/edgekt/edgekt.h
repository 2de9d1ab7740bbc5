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

/* C interface of libedgekt. Every call returns an ekt_status; on failure
 * ekt_last_error() holds a message for the calling thread until its next
 * call into the library. Handles are opaque and owned by the caller. */

#ifndef EDGEKT_EDGEKT_H
#define EDGEKT_EDGEKT_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define EKT_API __declspec(dllexport)
#else
#define EKT_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum ekt_status {
  EKT_OK = 0,
  EKT_INVALID_ARGUMENT = 1,
  EKT_CONFIG = 2,
  EKT_IO = 3,
  EKT_SHAPE = 4,
  EKT_NUMERIC = 5,
  EKT_PROTOCOL = 6,
  EKT_INTERNAL = 7
} ekt_status;

typedef struct ekt_scenario ekt_scenario;
typedef struct ekt_stream ekt_stream;
typedef struct ekt_report ekt_report;
typedef struct ekt_comparison ekt_comparison;

/* Aggregate figures of one run. */
typedef struct ekt_summary {
  size_t frames;
  size_t key_frames;
  double precision;
  double recall;
  double f1;
  double joules_per_frame;
  double total_joules;
  double mean_inference_s;
  double mean_training_s;
  double overall_score;
} ekt_summary;

EKT_API const char* ekt_version(void);
EKT_API const char* ekt_status_name(ekt_status status);
/* Empty string when the last call on this thread succeeded. */
EKT_API const char* ekt_last_error(void);
/* Frees strings returned through char** out-parameters. */
EKT_API void ekt_string_free(char* text);

/* Scenarios: shallow, deep, lt, nt-lan, nt-wifi, hybrid. */
EKT_API ekt_status ekt_scenario_preset(const char* name, ekt_scenario** out);
EKT_API void ekt_scenario_destroy(ekt_scenario* scenario);
/* JSON object of overrides; unknown keys are EKT_CONFIG. */
EKT_API ekt_status ekt_scenario_apply_json(ekt_scenario* scenario, const char* json);
/* "full" or "half". */
EKT_API ekt_status ekt_scenario_set_precision(ekt_scenario* scenario, const char* precision);
EKT_API ekt_status ekt_scenario_set_kfs(ekt_scenario* scenario, int enabled);
EKT_API ekt_status ekt_scenario_set_seed(ekt_scenario* scenario, uint64_t seed);
EKT_API ekt_status ekt_scenario_to_json(const ekt_scenario* scenario, char** out_json);

/* A scene preset name (fixed_cam_default, moving_cam_default) or the path
 * of a scene script JSON file. */
EKT_API ekt_status ekt_stream_open(const char* preset_or_path, ekt_stream** out);
EKT_API void ekt_stream_destroy(ekt_stream* stream);
EKT_API size_t ekt_stream_frames(const ekt_stream* stream);

EKT_API ekt_status ekt_run(const ekt_scenario* scenario, const ekt_stream* stream,
                           ekt_report** out);
EKT_API void ekt_report_destroy(ekt_report* report);
EKT_API ekt_status ekt_report_summary(const ekt_report* report, ekt_summary* out);
EKT_API ekt_status ekt_report_to_json(const ekt_report* report, char** out_json);
/* format: "json" or "csv" (per-frame trace). */
EKT_API ekt_status ekt_report_write(const ekt_report* report, const char* format,
                                    const char* path);

/* Runs the five comparison scenarios with `overrides_json` (may be NULL)
 * applied to each and the given seed. */
EKT_API ekt_status ekt_compare(const ekt_stream* stream, const char* overrides_json,
                               uint64_t seed, ekt_comparison** out);
EKT_API void ekt_comparison_destroy(ekt_comparison* comparison);
EKT_API size_t ekt_comparison_size(const ekt_comparison* comparison);
/* Scenario name of row `index`, valid while the handle lives. */
EKT_API const char* ekt_comparison_name(const ekt_comparison* comparison, size_t index);
EKT_API ekt_status ekt_comparison_summary(const ekt_comparison* comparison, size_t index,
                                          ekt_summary* out);
EKT_API ekt_status ekt_comparison_write_csv(const ekt_comparison* comparison,
                                            const char* path);

#ifdef __cplusplus
}
#endif

#endif /* EDGEKT_EDGEKT_H */
