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

#include "edgekt/detection.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace edgekt {

namespace {

constexpr float kMinSide = 1.0f / 512.0f;

std::vector<std::size_t> score_order(const std::vector<Box>& boxes) {
  std::vector<std::size_t> order(boxes.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return boxes[a].score > boxes[b].score;
  });
  return order;
}

}  // namespace

MetricsReport MetricsReport::from_counts(std::size_t tp, std::size_t fp,
                                         std::size_t fn) {
  MetricsReport r;
  r.true_positives = tp;
  r.false_positives = fp;
  r.false_negatives = fn;
  r.precision = (tp + fp) == 0 ? 0.0 : static_cast<double>(tp) / (tp + fp);
  r.recall = (tp + fn) == 0 ? 0.0 : static_cast<double>(tp) / (tp + fn);
  const double pr = r.precision + r.recall;
  r.f1 = pr == 0.0 ? 0.0 : 2.0 * r.precision * r.recall / pr;
  return r;
}

double sigmoid(double x) noexcept { return 1.0 / (1.0 + std::exp(-x)); }

std::vector<Box> decode_boxes(const DetectionTensorSet& out,
                              double obj_threshold) {
  std::vector<Box> boxes;
  for (const Tensor& t : out.scales) {
    const std::size_t g = t.shape()[0];
    const std::size_t channels = t.shape()[2];
    const float inv_g = 1.0f / static_cast<float>(g);
    for (std::size_t row = 0; row < g; ++row) {
      for (std::size_t col = 0; col < g; ++col) {
        const double score = sigmoid(t(row, col, kObjectnessChannel));
        if (score < obj_threshold) continue;

        std::size_t best = kClassOffset;
        for (std::size_t c = kClassOffset + 1; c < channels; ++c) {
          if (t(row, col, c) > t(row, col, best)) best = c;
        }
        Box b;
        b.x = (static_cast<float>(col) + std::clamp(t(row, col, 0), 0.0f, 1.0f)) * inv_g;
        b.y = (static_cast<float>(row) + std::clamp(t(row, col, 1), 0.0f, 1.0f)) * inv_g;
        b.w = std::clamp(t(row, col, 2), kMinSide, 1.0f);
        b.h = std::clamp(t(row, col, 3), kMinSide, 1.0f);
        b.class_id = static_cast<int>(best - kClassOffset);
        b.score = static_cast<float>(score);
        boxes.push_back(b);
      }
    }
  }
  return boxes;
}

double iou(const Box& a, const Box& b) noexcept {
  const double iw = std::min<double>(a.right(), b.right()) -
                    std::max<double>(a.left(), b.left());
  const double ih = std::min<double>(a.bottom(), b.bottom()) -
                    std::max<double>(a.top(), b.top());
  if (iw <= 0.0 || ih <= 0.0) return 0.0;
  const double inter = iw * ih;
  const double uni = static_cast<double>(a.w) * a.h +
                     static_cast<double>(b.w) * b.h - inter;
  if (uni <= 0.0) return 0.0;
  return std::clamp(inter / uni, 0.0, 1.0);
}

std::vector<Box> nms(std::vector<Box> boxes, double iou_threshold) {
  const auto order = score_order(boxes);
  std::vector<bool> dropped(boxes.size(), false);
  std::vector<Box> kept;
  for (std::size_t i = 0; i < order.size(); ++i) {
    const std::size_t a = order[i];
    if (dropped[a]) continue;
    kept.push_back(boxes[a]);
    for (std::size_t j = i + 1; j < order.size(); ++j) {
      const std::size_t b = order[j];
      if (dropped[b] || boxes[b].class_id != boxes[a].class_id) continue;
      if (iou(boxes[a], boxes[b]) > iou_threshold) dropped[b] = true;
    }
  }
  return kept;
}

MetricsReport compute_metrics(const std::vector<Box>& predicted,
                              const std::vector<Box>& truth, double match_iou) {
  std::vector<bool> matched(truth.size(), false);
  std::size_t tp = 0;
  for (std::size_t p : score_order(predicted)) {
    const Box& pred = predicted[p];
    double best_iou = -1.0;
    std::size_t best = truth.size();
    for (std::size_t t = 0; t < truth.size(); ++t) {
      if (matched[t] || truth[t].class_id != pred.class_id) continue;
      const double v = iou(pred, truth[t]);
      if (v >= match_iou && v > best_iou) {
        best_iou = v;
        best = t;
      }
    }
    if (best < truth.size()) {
      matched[best] = true;
      ++tp;
    }
  }
  return MetricsReport::from_counts(tp, predicted.size() - tp,
                                    truth.size() - tp);
}

}  // namespace edgekt
