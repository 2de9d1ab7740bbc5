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

#include "edgekt/energy.hpp"

#include <cmath>
#include <string>

#include "edgekt/error.hpp"

namespace edgekt {

namespace {

constexpr const char* kActivityNames[kActivityCount] = {
    "idle", "decode", "inference", "nms", "oracle_local", "train_local", "transmit", "receive",
};

}  // namespace

const char* activity_name(Activity a) noexcept {
  return kActivityNames[static_cast<std::size_t>(a)];
}

Activity activity_from_string(std::string_view name) {
  for (std::size_t i = 0; i < kActivityCount; ++i) {
    if (name == kActivityNames[i]) return static_cast<Activity>(i);
  }
  throw Error(Errc::invalid_argument, "unknown activity '" + std::string(name) + "'");
}

void PowerModel::validate() const {
  for (double w : watts) {
    if (!(w >= 0.0) || !std::isfinite(w)) throw Error(Errc::config, "power must be finite and >= 0");
  }
}

EnergyLedger::EnergyLedger(PowerModel power) : power_(power) { power_.validate(); }

void EnergyLedger::charge(Activity activity, double duration_s) {
  if (!(duration_s >= 0.0) || !std::isfinite(duration_s)) {
    throw Error(Errc::invalid_argument, "energy charge needs a finite duration >= 0");
  }
  if (static_cast<std::size_t>(activity) >= kActivityCount) {
    throw Error(Errc::invalid_argument, "unknown activity");
  }
  const LedgerEntry e{activity, duration_s, power_[activity]};
  entries_.push_back(e);
  const auto i = static_cast<std::size_t>(activity);
  joules_[i] += e.joules();
  seconds_[i] += duration_s;
  total_ += e.joules();
}

void CostModel::validate() const {
  auto positive = [](double v, const char* what) {
    if (!(v > 0.0) || !std::isfinite(v)) throw Error(Errc::config, std::string(what) + " must be > 0");
  };
  auto non_negative = [](double v, const char* what) {
    if (!(v >= 0.0) || !std::isfinite(v)) throw Error(Errc::config, std::string(what) + " must be >= 0");
  };
  positive(seconds_per_mac, "cost.seconds_per_mac");
  non_negative(decode_ops_per_value, "cost.decode_ops_per_value");
  non_negative(train_step_fraction, "cost.train_step_fraction");
  positive(edge_speedup, "cost.edge_speedup");
  non_negative(nms_base_s, "cost.nms_base_s");
  non_negative(nms_per_candidate_s, "cost.nms_per_candidate_s");
  non_negative(nms_per_pair_s, "cost.nms_per_pair_s");
  non_negative(contention_train, "cost.contention_train");
  non_negative(contention_radio, "cost.contention_radio");
  power.validate();
}

double CostModel::compute_seconds(std::uint64_t macs) const noexcept {
  return static_cast<double>(macs) * seconds_per_mac;
}

double CostModel::decode_seconds(std::size_t frame_values) const noexcept {
  return static_cast<double>(frame_values) * decode_ops_per_value * seconds_per_mac;
}

double CostModel::nms_seconds(std::size_t candidates) const noexcept {
  const double n = static_cast<double>(candidates);
  return nms_base_s + nms_per_candidate_s * n + nms_per_pair_s * n * (n > 0 ? n - 1 : 0);
}

}  // namespace edgekt
