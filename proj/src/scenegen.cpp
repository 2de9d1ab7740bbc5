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

#include "edgekt/scenegen.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>

#include "json.hpp"

#include "edgekt/error.hpp"

namespace edgekt {

namespace {

using nlohmann::json;

struct ClassLook {
  Rgb primary;
  Rgb secondary;
  int pattern;  // 0 solid, 1 horizontal stripes, 2 checker
};

ClassLook class_look(int class_id) {
  static const std::array<ClassLook, 6> kLooks{{
      {{0.85f, 0.25f, 0.20f}, {0.85f, 0.25f, 0.20f}, 0},
      {{0.20f, 0.75f, 0.30f}, {0.05f, 0.30f, 0.10f}, 1},
      {{0.25f, 0.35f, 0.90f}, {0.90f, 0.85f, 0.20f}, 2},
      {{0.95f, 0.95f, 0.95f}, {0.95f, 0.95f, 0.95f}, 0},
      {{0.60f, 0.20f, 0.70f}, {0.95f, 0.60f, 0.10f}, 1},
      {{0.10f, 0.10f, 0.10f}, {0.70f, 0.70f, 0.70f}, 2},
  }};
  return kLooks[static_cast<std::size_t>(class_id) % kLooks.size()];
}

struct CameraOffset {
  float x = 0.0f;
  float y = 0.0f;
};

CameraOffset camera_offset(const SceneScript& s, std::size_t index) {
  if (s.regime != CameraRegime::moving_camera) return {};
  const double phase =
      2.0 * std::numbers::pi * static_cast<double>(index) / s.camera.period_frames;
  return {static_cast<float>(s.camera.amplitude_x * std::sin(phase)),
          static_cast<float>(s.camera.amplitude_y * std::sin(phase - 0.5 * std::numbers::pi))};
}

struct Segment {
  std::size_t start = 0;
  const std::vector<ObjectSpec>* objects = nullptr;
  const Background* background = nullptr;
};

Segment segment_at(const SceneScript& s, std::size_t index) {
  Segment seg{0, &s.objects, &s.background};
  for (const SceneShift& shift : s.shift_schedule) {
    if (shift.frame > index) break;
    seg.start = shift.frame;
    seg.objects = &shift.objects;
    if (shift.background) seg.background = &*shift.background;
  }
  return seg;
}

// Object rectangle on screen (unclipped) at `index`.
Box object_rect(const ObjectSpec& o, std::size_t t, CameraOffset cam) {
  t -= t % o.hold_frames;
  float swing = 0.0f;
  if (o.period_frames > 0.0f) {
    swing = static_cast<float>(
        std::sin(2.0 * std::numbers::pi * static_cast<double>(t) / o.period_frames));
  }
  Box b;
  b.x = o.x + o.vx * static_cast<float>(t) + o.ax * swing - cam.x;
  b.y = o.y + o.vy * static_cast<float>(t) + o.ay * swing - cam.y;
  b.w = o.w;
  b.h = o.h;
  b.class_id = o.class_id;
  b.score = 1.0f;
  return b;
}

Box clip_to_frame(const Box& b) {
  const float l = std::max(0.0f, b.left());
  const float r = std::min(1.0f, b.right());
  const float t = std::max(0.0f, b.top());
  const float d = std::min(1.0f, b.bottom());
  Box c = b;
  c.x = 0.5f * (l + r);
  c.y = 0.5f * (t + d);
  c.w = std::max(0.0f, r - l);
  c.h = std::max(0.0f, d - t);
  return c;
}

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t index) {
  // splitmix64 step
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

void render_into(Tensor& img, const Background& bg, const std::vector<Box>& rects,
                 CameraOffset cam, float noise, std::uint64_t noise_seed) {
  const std::size_t H = img.shape()[0];
  const std::size_t W = img.shape()[1];
  const double two_pi = 2.0 * std::numbers::pi;
  const double ox = static_cast<double>(cam.x) * static_cast<double>(W);
  const double oy = static_cast<double>(cam.y) * static_cast<double>(H);

  for (std::size_t py = 0; py < H; ++py) {
    const double ty = std::cos(two_pi * (static_cast<double>(py) + oy) / bg.texture_period_px);
    for (std::size_t px = 0; px < W; ++px) {
      const double tx = std::sin(two_pi * (static_cast<double>(px) + ox) / bg.texture_period_px);
      const float tex = static_cast<float>(bg.texture_amplitude * tx * ty);
      for (std::size_t c = 0; c < 3; ++c) img(py, px, c) = bg.base[c] + tex;
    }
  }

  for (const Box& r : rects) {
    const float left = r.left() * static_cast<float>(W);
    const float right = r.right() * static_cast<float>(W);
    const float top = r.top() * static_cast<float>(H);
    const float bottom = r.bottom() * static_cast<float>(H);
    const ClassLook look = class_look(r.class_id);
    const auto x0 = static_cast<std::size_t>(std::max(0.0f, std::ceil(left - 0.5f)));
    const auto y0 = static_cast<std::size_t>(std::max(0.0f, std::ceil(top - 0.5f)));
    for (std::size_t py = y0; py < H && static_cast<float>(py) + 0.5f < bottom; ++py) {
      for (std::size_t px = x0; px < W && static_cast<float>(px) + 0.5f < right; ++px) {
        const auto lx = static_cast<long>(std::floor(static_cast<float>(px) - left));
        const auto ly = static_cast<long>(std::floor(static_cast<float>(py) - top));
        bool alt = false;
        if (look.pattern == 1) alt = (ly / 2) % 2 != 0;
        if (look.pattern == 2) alt = ((lx / 2) + (ly / 2)) % 2 != 0;
        const Rgb& col = alt ? look.secondary : look.primary;
        for (std::size_t c = 0; c < 3; ++c) img(py, px, c) = col[c];
      }
    }
  }

  if (noise > 0.0f) {
    std::mt19937_64 rng(noise_seed);
    std::normal_distribution<float> gauss(0.0f, noise);
    for (float& v : img.data()) v += gauss(rng);
  }
  for (float& v : img.data()) v = std::clamp(v, 0.0f, 1.0f);
}

Rgb rgb_from_json(const json& j) {
  Rgb c{};
  if (!j.is_array() || j.size() != 3) {
    throw Error(Errc::config, "color must be an array of 3 numbers");
  }
  for (std::size_t i = 0; i < 3; ++i) c[i] = j.at(i).get<float>();
  return c;
}

Background background_from_json(const json& j) {
  Background b;
  if (j.contains("base")) b.base = rgb_from_json(j.at("base"));
  b.texture_amplitude = j.value("texture_amplitude", b.texture_amplitude);
  b.texture_period_px = j.value("texture_period_px", b.texture_period_px);
  return b;
}

json background_to_json(const Background& b) {
  return json{{"base", {b.base[0], b.base[1], b.base[2]}},
              {"texture_amplitude", b.texture_amplitude},
              {"texture_period_px", b.texture_period_px}};
}

ObjectSpec object_from_json(const json& j) {
  ObjectSpec o;
  o.class_id = j.value("class_id", o.class_id);
  o.x = j.value("x", o.x);
  o.y = j.value("y", o.y);
  o.w = j.value("w", o.w);
  o.h = j.value("h", o.h);
  o.vx = j.value("vx", o.vx);
  o.vy = j.value("vy", o.vy);
  o.ax = j.value("ax", o.ax);
  o.ay = j.value("ay", o.ay);
  o.period_frames = j.value("period_frames", o.period_frames);
  o.hold_frames = j.value("hold_frames", o.hold_frames);
  return o;
}

json object_to_json(const ObjectSpec& o) {
  return json{{"class_id", o.class_id}, {"x", o.x},   {"y", o.y},   {"w", o.w},
              {"h", o.h},               {"vx", o.vx}, {"vy", o.vy}, {"ax", o.ax},
              {"ay", o.ay},             {"period_frames", o.period_frames},
              {"hold_frames", o.hold_frames}};
}

std::vector<ObjectSpec> objects_from_json(const json& j) {
  std::vector<ObjectSpec> out;
  for (const json& o : j) out.push_back(object_from_json(o));
  return out;
}

json objects_to_json(const std::vector<ObjectSpec>& objects) {
  json arr = json::array();
  for (const ObjectSpec& o : objects) arr.push_back(object_to_json(o));
  return arr;
}

}  // namespace

void validate_script(const SceneScript& s) {
  auto fail = [&](const std::string& what) {
    throw Error(Errc::config, "scene script '" + s.name + "': " + what);
  };
  if (s.duration_frames == 0) fail("duration_frames must be positive");
  if (s.height == 0 || s.height != s.width || s.height % 32 != 0) {
    fail("frames must be square with a side that is a multiple of 32");
  }
  if (s.classes == 0) fail("classes must be positive");
  if (!(s.fps > 0.0)) fail("fps must be positive");
  if (!(s.noise_level >= 0.0f)) fail("noise_level must be non-negative");
  if (s.regime == CameraRegime::moving_camera && !(s.camera.period_frames > 0.0f)) {
    fail("camera.period_frames must be positive");
  }

  std::size_t prev = 0;
  for (std::size_t i = 0; i < s.shift_schedule.size(); ++i) {
    const std::size_t f = s.shift_schedule[i].frame;
    if ((i > 0 && f <= prev) || f == 0) fail("shift indices must be strictly increasing and > 0");
    if (f >= s.duration_frames) fail("shift index beyond stream duration");
    prev = f;
  }

  auto check_objects = [&](const std::vector<ObjectSpec>& objs) {
    for (const ObjectSpec& o : objs) {
      if (o.class_id < 0 || static_cast<std::size_t>(o.class_id) >= s.classes) {
        fail("object class_id out of range");
      }
      if (!(o.w > 0.0f) || !(o.h > 0.0f) || o.w > 1.0f || o.h > 1.0f) {
        fail("object size must be in (0, 1]");
      }
      if ((o.ax != 0.0f || o.ay != 0.0f) && !(o.period_frames > 0.0f)) {
        fail("object swing needs period_frames > 0");
      }
      if (o.hold_frames == 0) fail("object hold_frames must be >= 1");
    }
  };
  check_objects(s.objects);
  for (const SceneShift& sh : s.shift_schedule) check_objects(sh.objects);

  for (std::size_t i = 0; i < s.duration_frames; ++i) {
    const Segment seg = segment_at(s, i);
    const CameraOffset cam = camera_offset(s, i);
    for (const ObjectSpec& o : *seg.objects) {
      const Box r = object_rect(o, i - seg.start, cam);
      const Box c = clip_to_frame(r);
      if (c.w * c.h < 0.5f * r.w * r.h) {
        fail("object leaves the frame (less than 50% visible) at frame " +
             std::to_string(i));
      }
    }
  }
}

const std::vector<Box>& Stream::truth_at(std::uint64_t frame_id) const {
  if (frame_id >= events_.size()) {
    throw Error(Errc::out_of_range,
                "frame id " + std::to_string(frame_id) + " outside stream of " +
                    std::to_string(events_.size()) + " frames");
  }
  return events_[frame_id].truth;
}

FrameEvent render_frame(const SceneScript& s, std::size_t index) {
  const Segment seg = segment_at(s, index);
  const CameraOffset cam = camera_offset(s, index);

  std::vector<Box> rects;
  for (const ObjectSpec& o : *seg.objects) {
    rects.push_back(object_rect(o, index - seg.start, cam));
  }

  FrameEvent ev;
  ev.frame_id = index;
  ev.arrival_time = static_cast<double>(index) / s.fps;
  ev.frame = Tensor({s.height, s.width, 3});
  render_into(ev.frame, *seg.background, rects, cam, s.noise_level,
              mix_seed(s.seed, index));
  for (const Box& r : rects) ev.truth.push_back(clip_to_frame(r));
  return ev;
}

Stream generate_stream(const SceneScript& script) {
  validate_script(script);
  std::vector<FrameEvent> events;
  events.reserve(script.duration_frames);
  for (std::size_t i = 0; i < script.duration_frames; ++i) {
    events.push_back(render_frame(script, i));
  }
  return Stream(script, std::move(events));
}

bool is_scene_preset(std::string_view name) {
  return name == "fixed_cam_default" || name == "moving_cam_default";
}

SceneScript scene_preset(std::string_view name) {
  SceneScript s;
  s.duration_frames = 600;
  s.height = s.width = 64;
  s.classes = 3;
  s.fps = 5.0;
  s.noise_level = 0.02f;
  s.seed = 7;
  s.background = Background{{0.45f, 0.50f, 0.42f}, 0.08f, 16.0f};
  // Stop-and-go trajectories: each object holds still for 50 frames, then
  // hops along a slow swing.
  auto hop = [](int cls, float x, float y, float w, float h, bool horizontal, float period) {
    ObjectSpec o{cls, x, y, w, h, 0.0f, 0.0f};
    (horizontal ? o.ax : o.ay) = 0.15f;
    o.period_frames = period;
    o.hold_frames = 50;
    return o;
  };
  s.objects = {
      hop(0, 0.27f, 0.28f, 0.20f, 0.20f, true, 300.0f),
      hop(1, 0.70f, 0.62f, 0.22f, 0.18f, false, 231.0f),
      hop(2, 0.28f, 0.73f, 0.18f, 0.22f, true, 393.0f),
  };
  SceneShift shift;
  shift.frame = 300;
  shift.objects = {
      hop(2, 0.72f, 0.28f, 0.20f, 0.22f, false, 270.0f),
      hop(0, 0.45f, 0.70f, 0.24f, 0.20f, true, 351.0f),
      hop(1, 0.27f, 0.30f, 0.16f, 0.20f, false, 429.0f),
  };
  shift.background = Background{{0.38f, 0.42f, 0.55f}, 0.10f, 12.0f};
  s.shift_schedule = {shift};

  if (name == "fixed_cam_default") {
    s.name = "fixed_cam_default";
    s.regime = CameraRegime::fixed_camera;
  } else if (name == "moving_cam_default") {
    s.name = "moving_cam_default";
    s.regime = CameraRegime::moving_camera;
    s.camera = CameraMotion{0.08f, 0.04f, 120.0f};
  } else {
    throw Error(Errc::config, "unknown scene preset '" + std::string(name) + "'");
  }
  return s;
}

std::string script_to_json(const SceneScript& s) {
  json j;
  j["name"] = s.name;
  j["regime"] = s.regime == CameraRegime::moving_camera ? "moving_camera" : "fixed_camera";
  j["duration_frames"] = s.duration_frames;
  j["height"] = s.height;
  j["width"] = s.width;
  j["classes"] = s.classes;
  j["fps"] = s.fps;
  j["background"] = background_to_json(s.background);
  j["objects"] = objects_to_json(s.objects);
  json shifts = json::array();
  for (const SceneShift& sh : s.shift_schedule) {
    json js{{"frame", sh.frame}, {"objects", objects_to_json(sh.objects)}};
    if (sh.background) js["background"] = background_to_json(*sh.background);
    shifts.push_back(std::move(js));
  }
  j["shift_schedule"] = std::move(shifts);
  j["camera"] = json{{"amplitude_x", s.camera.amplitude_x},
                     {"amplitude_y", s.camera.amplitude_y},
                     {"period_frames", s.camera.period_frames}};
  j["noise_level"] = s.noise_level;
  j["seed"] = s.seed;
  return j.dump(2);
}

SceneScript script_from_json(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(Errc::config, std::string("scene script is not valid JSON: ") + e.what());
  }
  try {
    SceneScript s;
    if (j.contains("preset")) s = scene_preset(j.at("preset").get<std::string>());
    s.name = j.value("name", s.name);
    if (j.contains("regime")) {
      const auto r = j.at("regime").get<std::string>();
      if (r == "fixed_camera") {
        s.regime = CameraRegime::fixed_camera;
      } else if (r == "moving_camera") {
        s.regime = CameraRegime::moving_camera;
      } else {
        throw Error(Errc::config, "unknown regime '" + r + "'");
      }
    }
    s.duration_frames = j.value("duration_frames", s.duration_frames);
    s.height = j.value("height", s.height);
    s.width = j.value("width", s.width);
    s.classes = j.value("classes", s.classes);
    s.fps = j.value("fps", s.fps);
    if (j.contains("background")) s.background = background_from_json(j.at("background"));
    if (j.contains("objects")) s.objects = objects_from_json(j.at("objects"));
    if (j.contains("shift_schedule")) {
      s.shift_schedule.clear();
      for (const json& js : j.at("shift_schedule")) {
        SceneShift sh;
        sh.frame = js.at("frame").get<std::size_t>();
        if (js.contains("objects")) sh.objects = objects_from_json(js.at("objects"));
        if (js.contains("background")) sh.background = background_from_json(js.at("background"));
        s.shift_schedule.push_back(std::move(sh));
      }
    }
    if (j.contains("camera")) {
      const json& c = j.at("camera");
      s.camera.amplitude_x = c.value("amplitude_x", s.camera.amplitude_x);
      s.camera.amplitude_y = c.value("amplitude_y", s.camera.amplitude_y);
      s.camera.period_frames = c.value("period_frames", s.camera.period_frames);
    }
    s.noise_level = j.value("noise_level", s.noise_level);
    s.seed = j.value("seed", s.seed);
    validate_script(s);
    return s;
  } catch (const json::exception& e) {
    throw Error(Errc::config, std::string("scene script: ") + e.what());
  }
}

SceneScript load_script(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::io, "cannot open scene script " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return script_from_json(ss.str());
}

std::vector<FrameEvent> pretraining_corpus(std::size_t size, std::size_t classes,
                                           std::size_t count, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<float> unit(0.0f, 1.0f);
  auto uniform = [&](float lo, float hi) { return lo + (hi - lo) * unit(rng); };

  std::vector<FrameEvent> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    Background bg;
    bg.base = {uniform(0.1f, 0.8f), uniform(0.1f, 0.8f), uniform(0.1f, 0.8f)};
    bg.texture_amplitude = uniform(0.0f, 0.06f);
    bg.texture_period_px = uniform(10.0f, 24.0f);

    std::vector<Box> rects;
    const auto n_obj = 1 + static_cast<std::size_t>(unit(rng) * 4.0f) % 4;
    for (std::size_t k = 0; k < n_obj; ++k) {
      for (int attempt = 0; attempt < 20; ++attempt) {
        Box b;
        b.w = uniform(0.12f, 0.45f);
        b.h = uniform(0.12f, 0.45f);
        b.x = uniform(0.5f * b.w, 1.0f - 0.5f * b.w);
        b.y = uniform(0.5f * b.h, 1.0f - 0.5f * b.h);
        b.class_id = static_cast<int>(rng() % classes);
        b.score = 1.0f;
        const bool overlaps = std::any_of(rects.begin(), rects.end(),
                                          [&](const Box& o) { return iou(o, b) > 0.0; });
        if (!overlaps) {
          rects.push_back(b);
          break;
        }
      }
    }

    FrameEvent ev;
    ev.frame_id = i;
    ev.frame = Tensor({size, size, 3});
    render_into(ev.frame, bg, rects, {}, 0.02f, mix_seed(seed ^ 0xabcdefULL, i));
    ev.truth = rects;
    out.push_back(std::move(ev));
  }
  return out;
}

void write_ppm(const Tensor& frame, const std::filesystem::path& path) {
  if (frame.rank() != 3 || frame.shape()[2] != 3) {
    throw Error(Errc::shape_mismatch, "write_ppm expects an H x W x 3 frame");
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(Errc::io, "cannot write " + path.string());
  out << "P6\n" << frame.shape()[1] << ' ' << frame.shape()[0] << "\n255\n";
  for (float v : frame.data()) {
    out.put(static_cast<char>(static_cast<unsigned char>(
        std::lround(std::clamp(v, 0.0f, 1.0f) * 255.0f))));
  }
  if (!out) throw Error(Errc::io, "failed writing " + path.string());
}

}  // namespace edgekt
