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
#include <vector>

#include "edgekt/tensor.hpp"

namespace edgekt {

inline constexpr std::size_t kNumScales = 3;

// Per-cell channel layout of every detection tensor:
//   [0..3] box (tx, ty, w, h), [4] objectness logit, [5..5+C) class scores.
inline constexpr std::size_t kBoxChannels = 4;
inline constexpr std::size_t kObjectnessChannel = 4;
inline constexpr std::size_t kClassOffset = 5;

inline constexpr std::size_t cell_channels(std::size_t classes) {
  return kClassOffset + classes;
}

/// The three output matrices of a detector, one per grid scale, each
/// shaped G x G x (5 + C).
struct DetectionTensorSet {
  std::array<Tensor, kNumScales> scales;
  // Adaptive-decoder version the producing forward pass used (0 for oracle).
  std::uint64_t weights_version = 0;

  std::size_t classes() const noexcept {
    return scales[0].shape()[2] - kClassOffset;
  }
};

/// Normalized detection box. (x, y) is the box center; all four values are
/// fractions of the frame width/height.
struct Box {
  float x = 0.0f;
  float y = 0.0f;
  float w = 0.0f;
  float h = 0.0f;
  int class_id = 0;
  float score = 0.0f;

  float left() const noexcept { return x - 0.5f * w; }
  float right() const noexcept { return x + 0.5f * w; }
  float top() const noexcept { return y - 0.5f * h; }
  float bottom() const noexcept { return y + 0.5f * h; }

  friend bool operator==(const Box&, const Box&) = default;
};

struct MetricsReport {
  std::size_t true_positives = 0;
  std::size_t false_positives = 0;
  std::size_t false_negatives = 0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;

  static MetricsReport from_counts(std::size_t tp, std::size_t fp,
                                   std::size_t fn);

  friend bool operator==(const MetricsReport&, const MetricsReport&) = default;
};

struct DetectionDefaults {
  static constexpr double obj_threshold = 0.5;
  static constexpr double nms_iou = 0.45;
  static constexpr double match_iou = 0.5;
};

double sigmoid(double x) noexcept;

/// One candidate per grid cell whose sigmoid(objectness) >= obj_threshold,
/// emitted in cell order (scale, row, column).
std::vector<Box> decode_boxes(const DetectionTensorSet& out,
                              double obj_threshold = DetectionDefaults::obj_threshold);

double iou(const Box& a, const Box& b) noexcept;

/// Greedy per-class NMS. Output is sorted by descending score; equal scores
/// keep their input order.
std::vector<Box> nms(std::vector<Box> boxes,
                     double iou_threshold = DetectionDefaults::nms_iou);

/// Greedy score-ordered matching at `match_iou`; precision/recall/F1 from the
/// resulting counts.
MetricsReport compute_metrics(const std::vector<Box>& predicted,
                              const std::vector<Box>& truth,
                              double match_iou = DetectionDefaults::match_iou);

}  // namespace edgekt
