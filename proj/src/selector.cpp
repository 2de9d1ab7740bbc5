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

#include "edgekt/selector.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "edgekt/error.hpp"

namespace edgekt {

KalmanUpdate kalman_update(const KalmanState& state, double measurement) {
  KalmanUpdate u;
  const double prior_var = state.variance + state.q;
  u.gain = prior_var / (prior_var + state.r);
  u.innovation = measurement - state.estimate;
  u.state = state;
  u.state.estimate = state.estimate + u.gain * u.innovation;
  u.state.variance = (1.0 - u.gain) * prior_var;
  return u;
}

double scene_change_statistic(const Tensor& current, const Tensor& last_key) {
  require_same_shape(current, last_key, "scene_change_statistic");
  if (current.empty()) return 0.0;
  double sum = 0.0;
  const auto a = current.data();
  const auto b = last_key.data();
  for (std::size_t i = 0; i < a.size(); ++i) {
    sum += std::fabs(static_cast<double>(a[i]) - static_cast<double>(b[i]));
  }
  return sum / static_cast<double>(a.size());
}

BinomialMapping binomial_mapping_from_string(std::string_view name) {
  if (name == "any_success") return BinomialMapping::any_success;
  if (name == "both_successes") return BinomialMapping::both_successes;
  if (name == "single_trial") return BinomialMapping::single_trial;
  throw Error(Errc::config, "unknown binomial mapping '" + std::string(name) + "'");
}

const char* binomial_mapping_name(BinomialMapping m) noexcept {
  switch (m) {
    case BinomialMapping::any_success: return "any_success";
    case BinomialMapping::both_successes: return "both_successes";
    case BinomialMapping::single_trial: return "single_trial";
  }
  return "any_success";
}

void SelectorConfig::validate() const {
  if (!(sigma >= 0.0)) throw Error(Errc::config, "selector sigma must be >= 0");
  if (!(tau_motion >= 0.0)) throw Error(Errc::config, "selector tau_motion must be >= 0");
  if (!(kalman_q > 0.0) || !(kalman_r > 0.0)) {
    throw Error(Errc::config, "kalman q and r must be > 0");
  }
  if (!(p_init >= kMinSelectProbability && p_init <= kMaxSelectProbability)) {
    throw Error(Errc::config, "p_init must lie in [0.05, 1.0]");
  }
}

double next_probability(double p, double delta_loss, double sigma) noexcept {
  if (delta_loss > sigma) return std::min(2.0 * p, kMaxSelectProbability);
  return std::max(p - kProbabilityDecay, kMinSelectProbability);
}

KeyFrameSelector::KeyFrameSelector(SelectorConfig config)
    : config_(config), p_(config.p_init), rng_(config.seed) {
  config_.validate();
  kalman_.q = config_.kalman_q;
  kalman_.r = config_.kalman_r;
}

double KeyFrameSelector::uniform() {
  ++draws_;
  return static_cast<double>(rng_() >> 11) * 0x1.0p-53;
}

bool KeyFrameSelector::motion_gate(const Tensor& frame) {
  if (!last_key_) return true;
  const double stat = scene_change_statistic(frame, *last_key_);
  const KalmanUpdate u = kalman_update(kalman_, stat);
  kalman_ = u.state;
  return std::fabs(u.innovation) > config_.tau_motion;
}

bool KeyFrameSelector::sample_binomial_gate() {
  const bool first = uniform() < p_;
  const bool second = uniform() < p_;
  switch (config_.mapping) {
    case BinomialMapping::any_success: return first || second;
    case BinomialMapping::both_successes: return first && second;
    case BinomialMapping::single_trial: return first;
  }
  return false;
}

bool KeyFrameSelector::select(const Tensor& frame) {
  if (busy_) return false;
  if (!motion_gate(frame)) return false;
  if (!sample_binomial_gate()) return false;
  busy_ = true;
  last_key_ = frame;
  return true;
}

bool KeyFrameSelector::select_unconditionally(const Tensor& frame) {
  if (busy_) return false;
  busy_ = true;
  last_key_ = frame;
  return true;
}

void KeyFrameSelector::update_probability(double new_loss) {
  if (!std::isfinite(new_loss)) {
    throw Error(Errc::non_finite, "update_probability: loss is not finite");
  }
  if (last_loss_) {
    p_ = next_probability(p_, std::fabs(new_loss - *last_loss_), config_.sigma);
  }
  last_loss_ = new_loss;
}

void KeyFrameSelector::complete(std::optional<double> final_loss) {
  busy_ = false;
  if (final_loss) update_probability(*final_loss);
}

void KeyFrameSelector::set_probability(double p) {
  if (!(p >= kMinSelectProbability && p <= kMaxSelectProbability)) {
    throw Error(Errc::invalid_argument, "selection probability must lie in [0.05, 1.0]");
  }
  p_ = p;
}

}  // namespace edgekt
