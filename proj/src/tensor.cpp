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

#include "edgekt/tensor.hpp"

#include <bit>
#include <cmath>
#include <functional>
#include <numeric>
#include <sstream>

#include "edgekt/error.hpp"

namespace edgekt {

std::size_t shape_volume(const Shape& shape) noexcept {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1},
                         std::multiplies<>());
}

namespace {

std::string shape_str(const Shape& s) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < s.size(); ++i) os << (i ? "," : "") << s[i];
  os << ']';
  return os.str();
}

}  // namespace

Tensor::Tensor(Shape shape)
    : shape_(std::move(shape)), data_(shape_volume(shape_), 0.0f) {}

Tensor::Tensor(Shape shape, std::vector<float> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
  if (data_.size() != shape_volume(shape_)) {
    throw Error(Errc::shape_mismatch, "tensor data length " +
                                          std::to_string(data_.size()) +
                                          " does not match shape " +
                                          shape_str(shape_));
  }
}

Tensor Tensor::filled(Shape shape, float value) {
  Tensor t(std::move(shape));
  std::fill(t.data_.begin(), t.data_.end(), value);
  return t;
}

bool Tensor::all_finite() const noexcept {
  for (float x : data_) {
    if (!std::isfinite(x)) return false;
  }
  return true;
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* what) {
  if (a.shape() != b.shape()) {
    throw Error(Errc::shape_mismatch, std::string(what) + ": shape " +
                                          shape_str(a.shape()) + " vs " +
                                          shape_str(b.shape()));
  }
}

double l2_sq_distance(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "l2_sq_distance");
  double sum = 0.0;
  const auto da = a.data();
  const auto db = b.data();
  for (std::size_t i = 0; i < da.size(); ++i) {
    const double d = static_cast<double>(da[i]) - static_cast<double>(db[i]);
    sum += d * d;
  }
  return sum;
}

AdamState AdamState::for_param(const Tensor& param, AdamConfig config) {
  AdamState s;
  s.m = Tensor(param.shape());
  s.v = Tensor(param.shape());
  s.config = config;
  return s;
}

Tensor adam_step(const Tensor& param, const Tensor& grad, AdamState& state) {
  require_same_shape(param, grad, "adam_step grad");
  require_same_shape(param, state.m, "adam_step first moment");
  require_same_shape(param, state.v, "adam_step second moment");
  if (!grad.all_finite()) {
    throw Error(Errc::non_finite, "adam_step: non-finite gradient");
  }

  const AdamConfig& c = state.config;
  const std::uint64_t t = state.step + 1;
  const double bc1 = 1.0 - std::pow(c.beta1, static_cast<double>(t));
  const double bc2 = 1.0 - std::pow(c.beta2, static_cast<double>(t));

  Tensor out = param;
  auto p = out.data();
  auto m = state.m.data();
  auto v = state.v.data();
  const auto g = grad.data();
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double gi = g[i];
    const double mi = c.beta1 * m[i] + (1.0 - c.beta1) * gi;
    const double vi = c.beta2 * v[i] + (1.0 - c.beta2) * gi * gi;
    m[i] = static_cast<float>(mi);
    v[i] = static_cast<float>(vi);
    const double m_hat = mi / bc1;
    const double v_hat = vi / bc2;
    p[i] = static_cast<float>(p[i] - c.lr * m_hat / (std::sqrt(v_hat) + c.eps));
  }
  state.step = t;
  return out;
}

std::uint16_t float_to_half(float value) {
  const std::uint32_t bits = std::bit_cast<std::uint32_t>(value);
  const std::uint32_t sign = (bits >> 16) & 0x8000u;
  const std::uint32_t abs = bits & 0x7fffffffu;

  if (abs >= 0x7f800000u) {
    throw Error(Errc::non_finite, "f16: value is NaN or infinite");
  }
  // Values below 65520 round down to kHalfMax; anything above would round
  // to infinity.
  if (std::fabs(value) >= 65520.0f) {
    throw Error(Errc::overflow,
                "f16: value " + std::to_string(value) + " exceeds binary16 range");
  }

  std::uint32_t h = 0;
  if (abs >= 0x38800000u) {
    // normal
    const std::uint32_t exp = (abs >> 23) - 127 + 15;
    const std::uint32_t mant = abs & 0x7fffffu;
    h = (exp << 10) | (mant >> 13);
    const std::uint32_t rem = mant & 0x1fffu;
    if (rem > 0x1000u || (rem == 0x1000u && (h & 1u))) ++h;
  } else if (abs > 0x33000000u) {
    // subnormal: value = m * 2^-24
    const std::uint32_t exp = abs >> 23;
    const std::uint32_t mant = (abs & 0x7fffffu) | 0x800000u;
    const std::uint32_t shift = 126 - exp;
    h = mant >> shift;
    const std::uint32_t rem = mant & ((1u << shift) - 1u);
    const std::uint32_t halfway = 1u << (shift - 1);
    if (rem > halfway || (rem == halfway && (h & 1u))) ++h;
  }
  return static_cast<std::uint16_t>(sign | h);
}

float half_to_float(std::uint16_t bits) noexcept {
  const std::uint32_t sign = (static_cast<std::uint32_t>(bits) & 0x8000u) << 16;
  const std::uint32_t exp = (bits >> 10) & 0x1fu;
  std::uint32_t mant = bits & 0x3ffu;

  std::uint32_t out = 0;
  if (exp == 0) {
    if (mant == 0) {
      out = sign;
    } else {
      int e = -1;
      do {
        ++e;
        mant <<= 1;
      } while ((mant & 0x400u) == 0);
      out = sign | static_cast<std::uint32_t>(127 - 15 - e) << 23 |
            (mant & 0x3ffu) << 13;
    }
  } else if (exp == 0x1f) {
    out = sign | 0x7f800000u | (mant << 13);
  } else {
    out = sign | (exp - 15 + 127) << 23 | (mant << 13);
  }
  return std::bit_cast<float>(out);
}

std::vector<std::uint8_t> f16_encode(const Tensor& t) {
  std::vector<std::uint8_t> out;
  out.reserve(t.size() * 2);
  for (float x : t.data()) {
    const std::uint16_t h = float_to_half(x);
    out.push_back(static_cast<std::uint8_t>(h & 0xff));
    out.push_back(static_cast<std::uint8_t>(h >> 8));
  }
  return out;
}

Tensor f16_decode(std::span<const std::uint8_t> bytes, const Shape& shape) {
  const std::size_t n = shape_volume(shape);
  if (bytes.size() != 2 * n) {
    throw Error(Errc::shape_mismatch,
                "f16_decode: " + std::to_string(bytes.size()) +
                    " bytes for shape " + shape_str(shape));
  }
  std::vector<float> data(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto h = static_cast<std::uint16_t>(bytes[2 * i] |
                                              (bytes[2 * i + 1] << 8));
    data[i] = half_to_float(h);
  }
  return Tensor(shape, std::move(data));
}

Tensor f16_round(const Tensor& t) {
  Tensor out = t;
  for (float& x : out.data()) x = half_to_float(float_to_half(x));
  return out;
}

}  // namespace edgekt
