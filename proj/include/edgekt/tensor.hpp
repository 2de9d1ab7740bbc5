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

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace edgekt {

using Shape = std::vector<std::size_t>;

std::size_t shape_volume(const Shape& shape) noexcept;

/// Dense row-major float tensor. Rank is arbitrary; the accessors cover the
/// rank-2 and rank-3 cases the models use.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape);
  Tensor(Shape shape, std::vector<float> data);

  static Tensor filled(Shape shape, float value);

  const Shape& shape() const noexcept { return shape_; }
  std::size_t rank() const noexcept { return shape_.size(); }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  std::span<const float> data() const noexcept { return data_; }
  std::span<float> data() noexcept { return data_; }

  float operator[](std::size_t i) const noexcept { return data_[i]; }
  float& operator[](std::size_t i) noexcept { return data_[i]; }

  float operator()(std::size_t r, std::size_t c) const noexcept {
    return data_[r * shape_[1] + c];
  }
  float& operator()(std::size_t r, std::size_t c) noexcept {
    return data_[r * shape_[1] + c];
  }
  float operator()(std::size_t i, std::size_t j, std::size_t k) const noexcept {
    return data_[(i * shape_[1] + j) * shape_[2] + k];
  }
  float& operator()(std::size_t i, std::size_t j, std::size_t k) noexcept {
    return data_[(i * shape_[1] + j) * shape_[2] + k];
  }

  bool all_finite() const noexcept;

  friend bool operator==(const Tensor&, const Tensor&) = default;

 private:
  Shape shape_;
  std::vector<float> data_;
};

void require_same_shape(const Tensor& a, const Tensor& b, const char* what);

/// Sum of squared elementwise differences, accumulated in double.
double l2_sq_distance(const Tensor& a, const Tensor& b);

// ---------------------------------------------------------------------------
// Adam

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  std::uint64_t step = 0;
  Tensor m;
  Tensor v;
  AdamConfig config;

  static AdamState for_param(const Tensor& param, AdamConfig config = {});
};

/// One bias-corrected Adam update. Returns the new parameters and advances
/// `state` (step, first and second moments).
Tensor adam_step(const Tensor& param, const Tensor& grad, AdamState& state);

// ---------------------------------------------------------------------------
// IEEE 754 binary16

inline constexpr float kHalfMax = 65504.0f;

/// Round-to-nearest-even conversion. Throws Errc::overflow when the value
/// would round to infinity and Errc::non_finite for NaN/Inf.
std::uint16_t float_to_half(float value);
float half_to_float(std::uint16_t bits) noexcept;

std::vector<std::uint8_t> f16_encode(const Tensor& t);
Tensor f16_decode(std::span<const std::uint8_t> bytes, const Shape& shape);

/// f16_decode(f16_encode(t)) without the byte detour.
Tensor f16_round(const Tensor& t);

}  // namespace edgekt
