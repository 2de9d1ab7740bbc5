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
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "edgekt/detection.hpp"
#include "edgekt/tensor.hpp"

namespace edgekt {

enum class CameraRegime { fixed_camera, moving_camera };

using Rgb = std::array<float, 3>;

struct Background {
  Rgb base{0.45f, 0.50f, 0.42f};
  // Sinusoidal texture that pans with the camera.
  float texture_amplitude = 0.08f;
  float texture_period_px = 16.0f;

  friend bool operator==(const Background&, const Background&) = default;
};

/// Rectangle object. The box center starts at (x, y) in normalized frame
/// coordinates when the object becomes active, then moves with velocity
/// (vx, vy) per frame plus an optional back-and-forth swing of amplitude
/// (ax, ay) and period `period_frames`. With hold_frames > 1 the object
/// moves in hops: its trajectory clock advances once every hold_frames.
struct ObjectSpec {
  int class_id = 0;
  float x = 0.5f;
  float y = 0.5f;
  float w = 0.2f;
  float h = 0.2f;
  float vx = 0.0f;
  float vy = 0.0f;
  float ax = 0.0f;
  float ay = 0.0f;
  float period_frames = 0.0f;
  std::uint32_t hold_frames = 1;

  friend bool operator==(const ObjectSpec&, const ObjectSpec&) = default;
};

/// From `frame` on, the object set is replaced (trajectories restart at the
/// shift frame) and, optionally, the background.
struct SceneShift {
  std::size_t frame = 0;
  std::vector<ObjectSpec> objects;
  std::optional<Background> background;

  friend bool operator==(const SceneShift&, const SceneShift&) = default;
};

/// Global camera pan for the moving regime: offset(t) = A * sin(2*pi*t/P),
/// with the y component a quarter period behind.
struct CameraMotion {
  float amplitude_x = 0.08f;
  float amplitude_y = 0.04f;
  float period_frames = 120.0f;

  friend bool operator==(const CameraMotion&, const CameraMotion&) = default;
};

struct SceneScript {
  std::string name = "custom";
  CameraRegime regime = CameraRegime::fixed_camera;
  std::size_t duration_frames = 600;
  std::size_t height = 64;
  std::size_t width = 64;
  std::size_t classes = 3;
  double fps = 5.0;
  Background background;
  std::vector<ObjectSpec> objects;
  std::vector<SceneShift> shift_schedule;
  CameraMotion camera;
  float noise_level = 0.02f;
  std::uint64_t seed = 7;

  friend bool operator==(const SceneScript&, const SceneScript&) = default;
};

struct FrameEvent {
  std::uint64_t frame_id = 0;
  double arrival_time = 0.0;
  Tensor frame;
  std::vector<Box> truth;
};

/// Throws Errc::config describing the first violated constraint.
void validate_script(const SceneScript& script);

class Stream {
 public:
  Stream(SceneScript script, std::vector<FrameEvent> events)
      : script_(std::move(script)), events_(std::move(events)) {}

  const SceneScript& script() const noexcept { return script_; }
  std::size_t size() const noexcept { return events_.size(); }
  const FrameEvent& operator[](std::size_t i) const { return events_[i]; }
  auto begin() const noexcept { return events_.begin(); }
  auto end() const noexcept { return events_.end(); }

  /// Throws Errc::out_of_range for an unknown frame id.
  const std::vector<Box>& truth_at(std::uint64_t frame_id) const;

 private:
  SceneScript script_;
  std::vector<FrameEvent> events_;
};

Stream generate_stream(const SceneScript& script);

/// Renders a single frame of the script; generate_stream is this in a loop.
FrameEvent render_frame(const SceneScript& script, std::size_t index);

/// Named presets: "fixed_cam_default", "moving_cam_default".
SceneScript scene_preset(std::string_view name);
bool is_scene_preset(std::string_view name);

/// Loads a script from a JSON file (schema in README).
SceneScript load_script(const std::filesystem::path& path);
std::string script_to_json(const SceneScript& script);
SceneScript script_from_json(std::string_view text);

/// Generic labelled frames with a broad palette, used to fit the student's
/// general decoder before deployment.
std::vector<FrameEvent> pretraining_corpus(std::size_t size, std::size_t classes,
                                           std::size_t count, std::uint64_t seed);

/// Binary PPM (P6) dump for eyeballing frames.
void write_ppm(const Tensor& frame, const std::filesystem::path& path);

}  // namespace edgekt
