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

#include <bit>
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "doctest.h"
#include "edgekt/error.hpp"
#include "edgekt/tensor.hpp"

using namespace edgekt;

namespace {

Errc code_of(auto&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected edgekt::Error");
  return Errc::invalid_argument;
}

Tensor random_tensor(Shape shape, std::mt19937_64& rng, float lo = -1.0f, float hi = 1.0f) {
  std::uniform_real_distribution<float> d(lo, hi);
  Tensor t(std::move(shape));
  for (float& x : t.data()) x = d(rng);
  return t;
}

// Reference decode straight from the binary16 definition.
double half_reference(std::uint16_t h) {
  const int sign = (h >> 15) ? -1 : 1;
  const int exp = (h >> 10) & 0x1f;
  const int mant = h & 0x3ff;
  if (exp == 0) return sign * std::ldexp(mant, -24);
  if (exp == 31) return mant ? NAN : sign * INFINITY;
  return sign * std::ldexp(1024 + mant, exp - 25);
}

}  // namespace

TEST_CASE("tensor construction checks the data length") {
  CHECK(Tensor({2, 3}).size() == 6);
  CHECK(code_of([] { Tensor({2, 2}, {1.0f, 2.0f}); }) == Errc::shape_mismatch);
  CHECK(Tensor::filled({3}, 2.5f)[2] == 2.5f);
  CHECK(shape_volume({}) == 1);
}

TEST_CASE("l2_sq_distance") {
  const Tensor a({2}, {1.0f, 2.0f});
  CHECK(l2_sq_distance(a, a) == 0.0);
  CHECK(l2_sq_distance(a, Tensor({2}, {2.0f, 3.0f})) == 2.0);
  CHECK(code_of([&] { l2_sq_distance(a, Tensor({3})); }) == Errc::shape_mismatch);

  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    const Tensor x = random_tensor({3, 3}, rng);
    const Tensor y = random_tensor({3, 3}, rng);
    double brute = 0.0;
    for (std::size_t r = 0; r < 3; ++r) {
      for (std::size_t c = 0; c < 3; ++c) {
        const double d = double(x(r, c)) - double(y(r, c));
        brute += d * d;
      }
    }
    CHECK(l2_sq_distance(x, y) == doctest::Approx(brute).epsilon(1e-12));
    CHECK(l2_sq_distance(x, y) == l2_sq_distance(y, x));
    CHECK(l2_sq_distance(x, x) == 0.0);
  }
}

TEST_CASE("adam first step from the hand-evaluated formula") {
  const Tensor p({1}, {1.0f});
  AdamState st = AdamState::for_param(p, {.lr = 0.1});
  const Tensor out = adam_step(p, Tensor({1}, {1.0f}), st);
  // m_hat = v_hat = 1 at step one, so the step is lr / (1 + eps).
  CHECK(out[0] == doctest::Approx(1.0 - 0.1 / (1.0 + 1e-8)).epsilon(1e-7));
  CHECK(st.step == 1);
  CHECK(st.m.shape() == p.shape());
  CHECK(st.v.shape() == p.shape());
}

TEST_CASE("adam minimises x^2 like a scalar reference") {
  double ref_x = 1.0, m = 0.0, v = 0.0;
  Tensor x({1}, {1.0f});
  AdamState st = AdamState::for_param(x, {.lr = 0.05});
  int reached = -1;
  for (int t = 1; t <= 200; ++t) {
    const double g = 2.0 * ref_x;
    m = 0.9 * m + 0.1 * g;
    v = 0.999 * v + 0.001 * g * g;
    ref_x -= 0.05 * (m / (1 - std::pow(0.9, t))) / (std::sqrt(v / (1 - std::pow(0.999, t))) + 1e-8);

    x = adam_step(x, Tensor({1}, {2.0f * x[0]}), st);
    CHECK(x[0] == doctest::Approx(ref_x).epsilon(1e-4).scale(1.0));
    if (reached < 0 && std::fabs(x[0]) < 0.1f) reached = t;
  }
  CHECK(reached > 0);
  CHECK(st.step == 200);
}

TEST_CASE("adam zero gradient is a fixpoint") {
  std::mt19937_64 rng(11);
  Tensor p = random_tensor({4, 5}, rng, -10.0f, 10.0f);
  const Tensor original = p;
  AdamState st = AdamState::for_param(p);
  for (int i = 0; i < 25; ++i) p = adam_step(p, Tensor(p.shape()), st);
  CHECK(p == original);
  CHECK(st.step == 25);
}

TEST_CASE("adam is deterministic and rejects bad input") {
  std::mt19937_64 rng(5);
  const Tensor p = random_tensor({6}, rng);
  const Tensor g = random_tensor({6}, rng);
  AdamState a = AdamState::for_param(p), b = AdamState::for_param(p);
  const Tensor pa = adam_step(p, g, a);
  const Tensor pb = adam_step(p, g, b);
  CHECK(pa == pb);
  CHECK(a.m == b.m);
  CHECK(a.v == b.v);

  CHECK(code_of([&] { adam_step(p, Tensor({5}), a); }) == Errc::shape_mismatch);
  Tensor nan_grad = g;
  nan_grad[2] = NAN;
  const auto before = a.step;
  CHECK(code_of([&] { adam_step(p, nan_grad, a); }) == Errc::non_finite);
  CHECK(a.step == before);
}

TEST_CASE("float_to_half matches frozen reference conversions") {
  // float32 bits -> binary16 bits, produced with numpy's astype(float16).
  struct Row {
    std::uint32_t f32;
    std::uint16_t f16;
  };
  const Row rows[] = {
      {0x00000000, 0x0000}, {0x80000000, 0x8000}, {0x3f800000, 0x3c00},
      {0xc0000000, 0xc000}, {0x3f000000, 0x3800}, {0x3eaaaaab, 0x3555},
      {0x3dcccccd, 0x2e66}, {0x477fe000, 0x7bff}, {0x477fef00, 0x7bff},
      {0x38800000, 0x0400}, {0x33800000, 0x0001}, {0x33000000, 0x0000},
      {0x33000001, 0x0001}, {0x33d6bf95, 0x0002}, {0x40490fdb, 0x4248},
      {0xc49a522b, 0xe4d3}, {0x3f801000, 0x3c00}, {0x3f801800, 0x3c01},
      {0x390173f8, 0x080c},
  };
  for (const Row& r : rows) {
    CAPTURE(r.f32);
    CHECK(float_to_half(std::bit_cast<float>(r.f32)) == r.f16);
  }
}

TEST_CASE("half_to_float agrees with the binary16 definition on every pattern") {
  for (std::uint32_t h = 0; h < 0x10000; ++h) {
    const double ref = half_reference(static_cast<std::uint16_t>(h));
    const float got = half_to_float(static_cast<std::uint16_t>(h));
    if (std::isnan(ref)) {
      CHECK(std::isnan(got));
    } else {
      REQUIRE(static_cast<double>(got) == ref);
      REQUIRE(std::signbit(got) == bool(h & 0x8000));
    }
  }
}

TEST_CASE("float_to_half rounds to a nearest representable value") {
  std::mt19937_64 rng(21);
  std::uniform_int_distribution<std::uint32_t> bits(0, 0x477fefffu);
  for (int i = 0; i < 200000; ++i) {
    const float x = std::bit_cast<float>(bits(rng));
    const std::uint16_t h = float_to_half(x);
    const double got = half_to_float(h);
    // Neighbours one unit away must not be strictly closer.
    const double err = std::fabs(got - x);
    if (h != 0x7bff) REQUIRE(std::fabs(half_reference(h + 1) - x) >= err);
    if (h != 0) REQUIRE(std::fabs(half_reference(h - 1) - x) >= err);
  }
}

TEST_CASE("f16 range errors") {
  CHECK(code_of([] { float_to_half(65520.0f); }) == Errc::overflow);
  CHECK(code_of([] { float_to_half(-1e6f); }) == Errc::overflow);
  CHECK(code_of([] { float_to_half(NAN); }) == Errc::non_finite);
  CHECK(code_of([] { float_to_half(INFINITY); }) == Errc::non_finite);
  CHECK(code_of([] { f16_encode(Tensor({2}, {1.0f, 7e4f})); }) == Errc::overflow);
  CHECK(code_of([] { f16_decode(std::vector<std::uint8_t>(3), {2}); }) == Errc::shape_mismatch);
}

TEST_CASE("f16 codec") {
  const Tensor exact({4}, {0.0f, 1.0f, -2.0f, 0.5f});
  const auto bytes = f16_encode(exact);
  CHECK(bytes.size() == 8);
  CHECK(bytes[2] == 0x00);
  CHECK(bytes[3] == 0x3c);  // little-endian 1.0
  CHECK(f16_decode(bytes, {4}) == exact);

  const float third = 1.0f / 3.0f;
  const float back = f16_decode(f16_encode(Tensor({1}, {third})), {1})[0];
  CHECK(std::fabs(back - third) / third <= std::ldexp(1.0, -11));
}

TEST_CASE("f16 round trip error bound over 1e5 samples") {
  std::mt19937_64 rng(99);
  const Tensor t = random_tensor({100000}, rng, -1000.0f, 1000.0f);
  const Tensor back = f16_decode(f16_encode(t), t.shape());
  CHECK(back == f16_round(t));
  double worst_rel = 0.0, worst_abs_sub = 0.0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    const double x = t[i], y = back[i];
    if (std::fabs(x) >= std::ldexp(1.0, -14)) {
      worst_rel = std::max(worst_rel, std::fabs(y - x) / std::fabs(x));
    } else {
      worst_abs_sub = std::max(worst_abs_sub, std::fabs(y - x));
    }
  }
  CHECK(worst_rel <= std::ldexp(1.0, -11));
  CHECK(worst_abs_sub <= 6e-5);
}
