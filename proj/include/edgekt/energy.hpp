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
#include <string_view>
#include <vector>

namespace edgekt {

enum class Activity : std::uint8_t {
  idle,
  decode,
  inference,
  nms,
  oracle_local,
  train_local,
  transmit,
  receive,
};

inline constexpr std::size_t kActivityCount = 8;

const char* activity_name(Activity a) noexcept;
/// Throws Errc::invalid_argument for an unknown name.
Activity activity_from_string(std::string_view name);

/// User-end power draw per activity, in watts. Calibration values, not
/// measurements.
struct PowerModel {
  std::array<double, kActivityCount> watts = {1.0, 1.5, 4.0, 2.0, 8.0, 8.0, 2.5, 2.5};

  double operator[](Activity a) const noexcept { return watts[static_cast<std::size_t>(a)]; }
  double& operator[](Activity a) noexcept { return watts[static_cast<std::size_t>(a)]; }
  void validate() const;
};

struct LedgerEntry {
  Activity activity = Activity::idle;
  double duration_s = 0.0;
  double power_w = 0.0;

  double joules() const noexcept { return duration_s * power_w; }
};

class EnergyLedger {
 public:
  explicit EnergyLedger(PowerModel power = {});

  /// Appends one entry at the activity's configured power. Throws
  /// Errc::invalid_argument for a negative or non-finite duration.
  void charge(Activity activity, double duration_s);

  const std::vector<LedgerEntry>& entries() const noexcept { return entries_; }
  double total_joules() const noexcept { return total_; }
  double joules(Activity a) const noexcept { return joules_[static_cast<std::size_t>(a)]; }
  double seconds(Activity a) const noexcept { return seconds_[static_cast<std::size_t>(a)]; }
  const PowerModel& power() const noexcept { return power_; }

 private:
  PowerModel power_;
  std::vector<LedgerEntry> entries_;
  std::array<double, kActivityCount> joules_{};
  std::array<double, kActivityCount> seconds_{};
  double total_ = 0.0;
};

/// Virtual-time cost of every pipeline stage. Compute stages scale with
/// their multiply-accumulate counts; NMS grows with the number of
/// candidate boxes, so a detector that emits more spurious candidates pays
/// more post-processing.
struct CostModel {
  double seconds_per_mac = 1.1e-6;      // user-end device
  double decode_ops_per_value = 1.5;    // video decode work per frame value
  double train_step_fraction = 0.25;    // one Adam step vs one student forward
  double edge_speedup = 10.0;           // edge compute relative to user-end
  double nms_base_s = 1e-3;
  double nms_per_candidate_s = 6e-4;
  double nms_per_pair_s = 1e-5;         // per ordered candidate pair
  double contention_train = 0.6;        // slowdown under local training
  double contention_radio = 0.08;       // slowdown under radio transfers
  PowerModel power;

  void validate() const;

  double compute_seconds(std::uint64_t macs) const noexcept;
  double decode_seconds(std::size_t frame_values) const noexcept;
  double nms_seconds(std::size_t candidates) const noexcept;
};

}  // namespace edgekt
