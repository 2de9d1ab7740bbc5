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

#include <cstdint>
#include <optional>
#include <random>
#include <string_view>

#include "edgekt/tensor.hpp"

namespace edgekt {

inline constexpr double kMinSelectProbability = 0.05;
inline constexpr double kMaxSelectProbability = 1.0;
inline constexpr double kProbabilityDecay = 0.05;

/// Scalar random-walk Kalman filter over the scene-change statistic.
struct KalmanState {
  double estimate = 0.0;
  double variance = 1.0;
  double q = 1e-4;  // process noise
  double r = 1e-2;  // measurement noise
};

struct KalmanUpdate {
  KalmanState state;
  double innovation = 0.0;  // measurement - prior estimate
  double gain = 0.0;
};

KalmanUpdate kalman_update(const KalmanState& state, double measurement);

/// Mean absolute elementwise difference between two equally shaped frames.
double scene_change_statistic(const Tensor& current, const Tensor& last_key);

/// How the draw X ~ Binomial(2, p) becomes the boolean I_R.
enum class BinomialMapping {
  any_success,    // X >= 1, P = 1 - (1 - p)^2
  both_successes, // X == 2, P = p^2
  single_trial,   // first trial only, P = p
};

BinomialMapping binomial_mapping_from_string(std::string_view name);
const char* binomial_mapping_name(BinomialMapping m) noexcept;

struct SelectorConfig {
  double sigma = 0.5;
  double tau_motion = 0.02;
  double kalman_q = 1e-4;
  double kalman_r = 1e-2;
  double p_init = 1.0;
  std::uint64_t seed = 1;
  BinomialMapping mapping = BinomialMapping::any_success;

  void validate() const;
};

/// P_t after one completed adaptation: decays by 0.05 (floor 0.05) when the
/// loss change is at most sigma, doubles (cap 1.0) when it exceeds sigma.
double next_probability(double p, double delta_loss, double sigma) noexcept;

/// Key-frame selector: motion gate (Kalman innovation on the scene-change
/// statistic against the last key frame) conjoined with a binomial draw
/// whose probability follows the distillation loss trend. While an
/// adaptation is in flight (busy) nothing is selected.
class KeyFrameSelector {
 public:
  explicit KeyFrameSelector(SelectorConfig config = {});

  /// Full decision for one observed frame. On true the frame becomes the
  /// last key frame and the selector turns busy.
  bool select(const Tensor& frame);

  /// "w/o KFS" policy: every frame is a key frame unless busy.
  bool select_unconditionally(const Tensor& frame);

  /// Updates the Kalman filter as a side effect. Always true before the
  /// first key frame exists.
  bool motion_gate(const Tensor& frame);

  /// Consumes exactly two uniform draws.
  bool sample_binomial_gate();

  /// Stores the loss; adjusts p from the second call on.
  void update_probability(double new_loss);

  /// Completion callback of the in-flight adaptation. A loss is reported
  /// for successful jobs only.
  void complete(std::optional<double> final_loss);

  double probability() const noexcept { return p_; }
  void set_probability(double p);
  bool busy() const noexcept { return busy_; }
  const KalmanState& kalman() const noexcept { return kalman_; }
  std::optional<double> last_loss() const noexcept { return last_loss_; }
  bool has_key_frame() const noexcept { return last_key_.has_value(); }
  std::uint64_t draws() const noexcept { return draws_; }
  const SelectorConfig& config() const noexcept { return config_; }

 private:
  double uniform();

  SelectorConfig config_;
  double p_;
  KalmanState kalman_;
  std::optional<Tensor> last_key_;
  std::optional<double> last_loss_;
  bool busy_ = false;
  std::mt19937_64 rng_;
  std::uint64_t draws_ = 0;
};

}  // namespace edgekt
