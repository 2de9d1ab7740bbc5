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

#include "edgekt/models.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <random>

#include "edgekt/error.hpp"
#include "edgekt/scenegen.hpp"
#include "bytes.hpp"

namespace edgekt {

using detail::ByteReader;
using detail::put_u32;
using detail::put_u64;

namespace {

constexpr std::uint64_t kFnvOffset = 0xcbf29ce484222325ULL;
constexpr std::uint64_t kFnvPrime = 0x100000001b3ULL;
constexpr std::uint64_t kPretrainSeedSalt = 0x5eed0fc0ffeeULL;
constexpr std::size_t kPretrainFrames = 96;
constexpr double kPositiveWeight = 16.0;
// Offsets and bias rows enter the output scaled up so that one Adam step
// moves a cell's logits as far as a content weight moves a feature response.
constexpr float kOffsetGain = 16.0f;

void fnv_mix(std::uint64_t& h, std::span<const float> values) {
  for (float v : values) {
    auto bits = std::bit_cast<std::uint32_t>(v);
    for (int i = 0; i < 4; ++i) {
      h ^= bits & 0xffu;
      h *= kFnvPrime;
      bits >>= 8;
    }
  }
}

Tensor avg_pool2(const Tensor& in) {
  const std::size_t g = in.shape()[0] / 2;
  const std::size_t k = in.shape()[2];
  Tensor out({g, g, k});
  for (std::size_t r = 0; r < g; ++r) {
    for (std::size_t c = 0; c < g; ++c) {
      for (std::size_t ch = 0; ch < k; ++ch) {
        out(r, c, ch) = 0.25f * (in(2 * r, 2 * c, ch) + in(2 * r + 1, 2 * c, ch) +
                                 in(2 * r, 2 * c + 1, ch) + in(2 * r + 1, 2 * c + 1, ch));
      }
    }
  }
  return out;
}

// Concatenates each cell's channels with those of its four direct
// neighbours (zero outside the grid): a cross-shaped 3x3 receptive field.
Tensor with_context(const Tensor& in) {
  const std::size_t g = in.shape()[0];
  const std::size_t k = in.shape()[2];
  Tensor out({g, g, kContextTaps * k});
  constexpr std::array<std::array<int, 2>, kContextTaps> kTaps{
      {{0, 0}, {0, -1}, {0, 1}, {-1, 0}, {1, 0}}};
  for (std::size_t r = 0; r < g; ++r) {
    for (std::size_t c = 0; c < g; ++c) {
      for (std::size_t t = 0; t < kContextTaps; ++t) {
        const long rr = static_cast<long>(r) + kTaps[t][0];
        const long cc = static_cast<long>(c) + kTaps[t][1];
        if (rr < 0 || cc < 0 || rr >= static_cast<long>(g) || cc >= static_cast<long>(g)) continue;
        for (std::size_t ch = 0; ch < k; ++ch) {
          out(r, c, t * k + ch) = in(static_cast<std::size_t>(rr), static_cast<std::size_t>(cc), ch);
        }
      }
    }
  }
  return out;
}

// Solves (A) X = B in place for a small dense symmetric positive system.
// A is n x n, B is n x m, both row-major.
void solve_dense(std::vector<double>& a, std::vector<double>& b, std::size_t n,
                 std::size_t m) {
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t pivot = col;
    for (std::size_t r = col + 1; r < n; ++r) {
      if (std::fabs(a[r * n + col]) > std::fabs(a[pivot * n + col])) pivot = r;
    }
    if (std::fabs(a[pivot * n + col]) < 1e-12) {
      throw Error(Errc::non_finite, "general decoder fit: singular normal equations");
    }
    if (pivot != col) {
      for (std::size_t j = 0; j < n; ++j) std::swap(a[col * n + j], a[pivot * n + j]);
      for (std::size_t j = 0; j < m; ++j) std::swap(b[col * m + j], b[pivot * m + j]);
    }
    for (std::size_t r = 0; r < n; ++r) {
      if (r == col) continue;
      const double f = a[r * n + col] / a[col * n + col];
      if (f == 0.0) continue;
      for (std::size_t j = col; j < n; ++j) a[r * n + j] -= f * a[col * n + j];
      for (std::size_t j = 0; j < m; ++j) b[r * m + j] -= f * b[col * m + j];
    }
  }
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t j = 0; j < m; ++j) b[r * m + j] /= a[r * n + r];
  }
}

}  // namespace

const char* precision_name(Precision p) noexcept {
  return p == Precision::half ? "half" : "full";
}

void ModelConfig::validate() const {
  if (input_size == 0 || input_size % 32 != 0) {
    throw Error(Errc::config, "model input size must be a positive multiple of 32");
  }
  if (classes == 0) throw Error(Errc::config, "model needs at least one class");
  if (feature_channels <= kPooledChannels) {
    throw Error(Errc::config, "feature_channels must exceed the pooled descriptor count");
  }
}

// ---------------------------------------------------------------------------
// FeatureExtractor

FeatureExtractor::FeatureExtractor(const ModelConfig& config)
    : input_size_(config.input_size), channels_(config.feature_channels) {
  config.validate();
  const std::size_t learned = channels_ - kPooledChannels;
  std::mt19937_64 rng(config.seed);
  std::normal_distribution<float> w(0.0f, 1.0f / std::sqrt(static_cast<float>(kFineChannels)));
  std::normal_distribution<float> b(0.0f, 0.05f);
  projection_ = Tensor({learned, kFineChannels});
  for (float& x : projection_.data()) x = w(rng);
  bias_ = Tensor({learned});
  for (float& x : bias_.data()) x = b(rng);
}

FeatureMaps FeatureExtractor::extract(const Tensor& frame) const {
  const std::size_t n = input_size_;
  const std::size_t blocks = n / 4;
  Tensor stage1({blocks, blocks, kBlockDescriptors});

  std::array<float, 16> lum{};
  for (std::size_t br = 0; br < blocks; ++br) {
    for (std::size_t bc = 0; bc < blocks; ++bc) {
      std::array<float, 3> mean{};
      for (std::size_t y = 0; y < 4; ++y) {
        for (std::size_t x = 0; x < 4; ++x) {
          const std::size_t py = br * 4 + y;
          const std::size_t px = bc * 4 + x;
          float l = 0.0f;
          for (std::size_t c = 0; c < 3; ++c) {
            const float v = frame(py, px, c);
            mean[c] += v;
            l += v;
          }
          lum[y * 4 + x] = l / 3.0f;
        }
      }
      float dx = 0.0f;
      float dy = 0.0f;
      float lmean = 0.0f;
      for (std::size_t y = 0; y < 4; ++y) {
        for (std::size_t x = 0; x < 4; ++x) {
          lmean += lum[y * 4 + x];
          if (x + 1 < 4) dx += std::fabs(lum[y * 4 + x + 1] - lum[y * 4 + x]);
          if (y + 1 < 4) dy += std::fabs(lum[(y + 1) * 4 + x] - lum[y * 4 + x]);
        }
      }
      lmean /= 16.0f;
      float var = 0.0f;
      for (float l : lum) var += (l - lmean) * (l - lmean);
      stage1(br, bc, 0) = mean[0] / 16.0f;
      stage1(br, bc, 1) = mean[1] / 16.0f;
      stage1(br, bc, 2) = mean[2] / 16.0f;
      stage1(br, bc, 3) = dx / 12.0f;
      stage1(br, bc, 4) = dy / 12.0f;
      stage1(br, bc, 5) = std::sqrt(var / 16.0f);
    }
  }

  const std::size_t g = n / 8;
  const std::size_t learned = channels_ - kPooledChannels;
  FeatureMaps maps;
  maps.fine = Tensor({g, g, kFineChannels});
  Tensor s0({g, g, channels_});
  for (std::size_t r = 0; r < g; ++r) {
    for (std::size_t c = 0; c < g; ++c) {
      for (std::size_t q = 0; q < 4; ++q) {
        const std::size_t br = 2 * r + q / 2;
        const std::size_t bc = 2 * c + q % 2;
        for (std::size_t d = 0; d < kBlockDescriptors; ++d) {
          const float v = stage1(br, bc, d);
          maps.fine(r, c, q * kBlockDescriptors + d) = v;
          s0(r, c, d) += 0.25f * v;
        }
      }
      for (std::size_t k = 0; k < learned; ++k) {
        float acc = bias_[k];
        for (std::size_t j = 0; j < kFineChannels; ++j) {
          acc += projection_(k, j) * maps.fine(r, c, j);
        }
        s0(r, c, kPooledChannels + k) = std::max(0.0f, acc);
      }
    }
  }
  if (!norm_.empty()) {
    for (std::size_t r = 0; r < g; ++r) {
      for (std::size_t c = 0; c < g; ++c) {
        for (std::size_t k = 0; k < channels_; ++k) {
          s0(r, c, k) = (s0(r, c, k) - norm_(0, k)) * norm_(1, k);
        }
        for (std::size_t j = 0; j < kFineChannels; ++j) {
          float& v = maps.fine(r, c, j);
          v = (v - norm_(0, channels_ + j)) * norm_(1, channels_ + j);
        }
      }
    }
  }
  Tensor s1 = avg_pool2(s0);
  Tensor s2 = avg_pool2(s1);
  maps.scales[0] = with_context(s0);
  maps.scales[1] = with_context(s1);
  maps.scales[2] = with_context(s2);
  return maps;
}

void FeatureExtractor::fit_normalization(std::span<const FrameEvent> frames) {
  norm_ = Tensor();
  const std::size_t width = channels_ + kFineChannels;
  std::vector<double> sum(width, 0.0);
  std::vector<double> sq(width, 0.0);
  std::size_t cells = 0;
  for (const FrameEvent& ev : frames) {
    const FeatureMaps f = extract(ev.frame);
    const std::size_t g = f.fine.shape()[0];
    for (std::size_t r = 0; r < g; ++r) {
      for (std::size_t c = 0; c < g; ++c) {
        // Centre tap of the context concatenation holds the cell itself.
        for (std::size_t k = 0; k < channels_; ++k) {
          const double v = f.scales[0](r, c, k);
          sum[k] += v;
          sq[k] += v * v;
        }
        for (std::size_t j = 0; j < kFineChannels; ++j) {
          const double v = f.fine(r, c, j);
          sum[channels_ + j] += v;
          sq[channels_ + j] += v * v;
        }
        ++cells;
      }
    }
  }
  if (cells == 0) throw Error(Errc::invalid_argument, "fit_normalization: no frames");
  Tensor norm({2, width});
  for (std::size_t i = 0; i < width; ++i) {
    const double mean = sum[i] / static_cast<double>(cells);
    const double var = std::max(0.0, sq[i] / static_cast<double>(cells) - mean * mean);
    norm(0, i) = static_cast<float>(mean);
    norm(1, i) = static_cast<float>(1.0 / std::sqrt(var + 1e-4));
  }
  norm_ = std::move(norm);
}

std::uint64_t FeatureExtractor::macs() const noexcept {
  const std::uint64_t n = input_size_;
  const std::uint64_t g = n / 8;
  const std::uint64_t stage1 = 12 * n * n;
  const std::uint64_t stage2 = g * g * ((channels_ - kPooledChannels) * kFineChannels + kFineChannels);
  const std::uint64_t pools = (g * g / 4 + g * g / 16) * 4 * channels_;
  return stage1 + stage2 + pools;
}

// ---------------------------------------------------------------------------
// Decoder weights

std::vector<Shape> adaptive_block_shapes(const ModelConfig& config) {
  const auto grids = config.grid_sizes();
  const std::size_t k = config.head_inputs();
  const std::size_t d = config.cell_channels();
  std::vector<Shape> shapes;
  for (std::size_t s = 0; s < kNumScales; ++s) {
    shapes.push_back({k + grids[s] * grids[s] + 1, d});
  }
  shapes.push_back({kFineChannels, d});
  return shapes;
}

DecoderWeights to_half_precision(const DecoderWeights& w) {
  DecoderWeights out = w;
  for (Tensor& b : out.blocks) b = f16_round(b);
  out.precision = Precision::half;
  return out;
}

std::vector<std::uint8_t> encode_decoder_weights(const DecoderWeights& w) {
  std::vector<std::uint8_t> out;
  put_u64(out, w.version);
  out.push_back(static_cast<std::uint8_t>(w.precision));
  for (const Tensor& b : w.blocks) {
    if (b.rank() > 255) throw Error(Errc::invalid_argument, "block rank exceeds 255");
    out.push_back(static_cast<std::uint8_t>(b.rank()));
    for (std::size_t dim : b.shape()) put_u32(out, static_cast<std::uint32_t>(dim));
    if (w.precision == Precision::half) {
      const auto bytes = f16_encode(b);
      out.insert(out.end(), bytes.begin(), bytes.end());
    } else {
      for (float v : b.data()) put_u32(out, std::bit_cast<std::uint32_t>(v));
    }
  }
  return out;
}

DecoderWeights decode_decoder_weights(std::span<const std::uint8_t> bytes) {
  ByteReader in(bytes, "decoder weights");
  DecoderWeights w;
  w.version = in.u64();
  const std::uint8_t tag = in.u8();
  if (tag > 1) throw Error(Errc::invalid_argument, "decoder weights: unknown precision tag");
  w.precision = static_cast<Precision>(tag);
  while (!in.done()) {
    const std::size_t rank = in.u8();
    Shape shape(rank);
    for (std::size_t& d : shape) d = in.u32();
    const std::size_t n = shape_volume(shape);
    if (w.precision == Precision::half) {
      w.blocks.push_back(f16_decode(in.take(2 * n), shape));
    } else {
      std::vector<float> data(n);
      for (float& v : data) v = std::bit_cast<float>(in.u32());
      w.blocks.emplace_back(std::move(shape), std::move(data));
    }
  }
  return w;
}

// ---------------------------------------------------------------------------
// StudentModel

StudentModel::StudentModel(ModelConfig config, FeatureExtractor extractor,
                           GeneralDecoder general)
    : config_(config), extractor_(std::move(extractor)), general_(std::move(general)) {
  config_.validate();
  auto w = std::make_shared<DecoderWeights>();
  w->version = 1;
  for (const Shape& s : adaptive_block_shapes(config_)) w->blocks.emplace_back(s);
  adaptive_ = std::move(w);
}

StudentModel::StudentModel(const StudentModel& other)
    : config_(other.config_),
      extractor_(other.extractor_),
      general_(other.general_),
      adaptive_(other.adaptive()) {}

StudentModel& StudentModel::operator=(const StudentModel& other) {
  if (this == &other) return *this;
  auto snapshot = other.adaptive();
  config_ = other.config_;
  extractor_ = other.extractor_;
  general_ = other.general_;
  std::lock_guard lock(slot_mutex_);
  adaptive_ = std::move(snapshot);
  return *this;
}

std::shared_ptr<const DecoderWeights> StudentModel::adaptive() const {
  std::lock_guard lock(slot_mutex_);
  return adaptive_;
}

std::uint64_t StudentModel::version() const { return adaptive()->version; }

void StudentModel::check_frame(const Tensor& frame) const {
  const Shape expected{config_.input_size, config_.input_size, 3};
  if (frame.shape() != expected) {
    throw Error(Errc::shape_mismatch, "student_forward: frame shape does not match model input");
  }
}

DetectionTensorSet StudentModel::forward(const Tensor& frame) const {
  check_frame(frame);
  auto weights = adaptive();
  return forward(extractor_.extract(frame), *weights);
}

DetectionTensorSet StudentModel::forward(const FeatureMaps& features,
                                         const DecoderWeights& adaptive) const {
  const auto grids = config_.grid_sizes();
  const std::size_t k = config_.head_inputs();
  const std::size_t d = config_.cell_channels();
  DetectionTensorSet out;
  out.weights_version = adaptive.version;

  for (std::size_t s = 0; s < kNumScales; ++s) {
    const std::size_t g = grids[s];
    const Tensor& feat = features.scales[s];
    const Tensor& gen = general_.heads[s];
    const Tensor& ada = adaptive.blocks[s];
    Tensor t({g, g, d});
    for (std::size_t r = 0; r < g; ++r) {
      for (std::size_t c = 0; c < g; ++c) {
        const std::size_t cell = r * g + c;
        for (std::size_t o = 0; o < d; ++o) {
          float acc = gen(k, o) + kOffsetGain * (ada(k + cell, o) + ada(k + g * g, o));
          for (std::size_t j = 0; j < k; ++j) {
            acc += feat(r, c, j) * (gen(j, o) + ada(j, o));
          }
          t(r, c, o) = acc;
        }
        if (s == 0) {
          const Tensor& small = adaptive.blocks[kNumScales];
          for (std::size_t o = 0; o < d; ++o) {
            float acc = 0.0f;
            for (std::size_t j = 0; j < kFineChannels; ++j) {
              acc += features.fine(r, c, j) * small(j, o);
            }
            t(r, c, o) += acc;
          }
        }
      }
    }
    out.scales[s] = std::move(t);
  }
  return out;
}

void StudentModel::swap_decoder(DecoderWeights weights) {
  const auto shapes = adaptive_block_shapes(config_);
  if (weights.blocks.size() != shapes.size()) {
    throw Error(Errc::shape_mismatch, "swap_decoder: wrong number of decoder blocks");
  }
  for (std::size_t i = 0; i < shapes.size(); ++i) {
    if (weights.blocks[i].shape() != shapes[i]) {
      throw Error(Errc::shape_mismatch, "swap_decoder: block shape mismatch");
    }
  }
  auto next = std::make_shared<const DecoderWeights>(std::move(weights));
  std::lock_guard lock(slot_mutex_);
  if (next->version <= adaptive_->version) {
    throw Error(Errc::stale_version,
                "swap_decoder: version " + std::to_string(next->version) +
                    " is not newer than " + std::to_string(adaptive_->version));
  }
  adaptive_ = std::move(next);
}

std::uint64_t StudentModel::frozen_checksum() const {
  std::uint64_t h = kFnvOffset;
  fnv_mix(h, extractor_.projection().data());
  fnv_mix(h, extractor_.bias().data());
  fnv_mix(h, extractor_.normalization().data());
  for (const Tensor& t : general_.heads) fnv_mix(h, t.data());
  return h;
}

std::uint64_t StudentModel::forward_macs() const noexcept {
  const auto grids = config_.grid_sizes();
  const std::uint64_t k = config_.head_inputs();
  const std::uint64_t d = config_.cell_channels();
  std::uint64_t heads = 0;
  for (std::size_t g : grids) heads += static_cast<std::uint64_t>(g) * g * (k + 2) * d;
  heads += static_cast<std::uint64_t>(grids[0]) * grids[0] * kFineChannels * d;
  return extractor_.macs() + heads;
}

// ---------------------------------------------------------------------------
// General decoder fit

GeneralDecoder fit_general_decoder(const ModelConfig& config,
                                   const FeatureExtractor& extractor,
                                   std::span<const FrameEvent> corpus, double ridge,
                                   double positive_weight) {
  const OracleModel oracle(config, OracleConfig{.noise_amplitude = 0.0f});
  const std::size_t k = config.head_inputs();
  const std::size_t n = k + 1;
  const std::size_t d = config.cell_channels();

  std::array<std::vector<double>, kNumScales> xtx;
  std::array<std::vector<double>, kNumScales> xty;
  std::array<std::size_t, kNumScales> rows{};
  for (std::size_t s = 0; s < kNumScales; ++s) {
    xtx[s].assign(n * n, 0.0);
    xty[s].assign(n * d, 0.0);
  }

  std::vector<double> x(n);
  for (const FrameEvent& ev : corpus) {
    const FeatureMaps f = extractor.extract(ev.frame);
    const DetectionTensorSet target = oracle.forward(ev.frame, ev.truth);
    for (std::size_t s = 0; s < kNumScales; ++s) {
      const std::size_t g = f.scales[s].shape()[0];
      for (std::size_t r = 0; r < g; ++r) {
        for (std::size_t c = 0; c < g; ++c) {
          for (std::size_t j = 0; j < k; ++j) x[j] = f.scales[s](r, c, j);
          x[k] = 1.0;
          const double wt =
              target.scales[s](r, c, kObjectnessChannel) > 0.0f ? positive_weight : 1.0;
          for (std::size_t a = 0; a < n; ++a) {
            for (std::size_t b = 0; b < n; ++b) xtx[s][a * n + b] += wt * x[a] * x[b];
            for (std::size_t o = 0; o < d; ++o) {
              xty[s][a * d + o] += wt * x[a] * target.scales[s](r, c, o);
            }
          }
          ++rows[s];
        }
      }
    }
  }

  GeneralDecoder gen;
  for (std::size_t s = 0; s < kNumScales; ++s) {
    for (std::size_t a = 0; a < k; ++a) {
      xtx[s][a * n + a] += ridge * static_cast<double>(std::max<std::size_t>(rows[s], 1));
    }
    solve_dense(xtx[s], xty[s], n, d);
    Tensor head({n, d});
    for (std::size_t i = 0; i < n * d; ++i) head[i] = static_cast<float>(xty[s][i]);
    gen.heads[s] = std::move(head);
  }
  return gen;
}

StudentModel make_pretrained_student(const ModelConfig& config) {
  config.validate();
  FeatureExtractor extractor(config);
  const auto corpus = pretraining_corpus(config.input_size, config.classes, kPretrainFrames,
                                         config.seed ^ kPretrainSeedSalt);
  extractor.fit_normalization(corpus);
  GeneralDecoder general = fit_general_decoder(config, extractor, corpus, 1e-2, kPositiveWeight);
  return StudentModel(config, std::move(extractor), std::move(general));
}

// ---------------------------------------------------------------------------
// Oracle

OracleModel::OracleModel(ModelConfig model, OracleConfig config)
    : model_(model), config_(config) {
  model_.validate();
  if (config_.layer_count < 2 * StudentModel::layer_count()) {
    throw Error(Errc::config, "oracle must be at least twice as deep as the student");
  }
  if (config_.noise_amplitude < 0.0f || config_.noise_amplitude > 0.01f) {
    throw Error(Errc::config, "oracle noise amplitude must lie in [0, 0.01]");
  }
}

std::size_t assign_scale(const Box& box, const ModelConfig& config) noexcept {
  const auto grids = config.grid_sizes();
  const float side = std::max(box.w, box.h);
  for (std::size_t s = 0; s < kNumScales; ++s) {
    if (side <= 2.0f / static_cast<float>(grids[s])) return s;
  }
  return kNumScales - 1;
}

DetectionTensorSet OracleModel::forward(const Tensor& frame,
                                        const std::vector<Box>& truth) const {
  const Shape expected{model_.input_size, model_.input_size, 3};
  if (frame.shape() != expected) {
    throw Error(Errc::shape_mismatch, "oracle_forward: frame shape does not match model input");
  }
  const auto grids = model_.grid_sizes();
  const std::size_t d = model_.cell_channels();
  const float logit = config_.objectness_logit;

  DetectionTensorSet out;
  for (std::size_t s = 0; s < kNumScales; ++s) {
    Tensor t({grids[s], grids[s], d});
    for (std::size_t r = 0; r < grids[s]; ++r) {
      for (std::size_t c = 0; c < grids[s]; ++c) t(r, c, kObjectnessChannel) = -logit;
    }
    out.scales[s] = std::move(t);
  }

  for (const Box& b : truth) {
    if (b.class_id < 0 || static_cast<std::size_t>(b.class_id) >= model_.classes) {
      throw Error(Errc::invalid_argument, "oracle_forward: truth class out of range");
    }
    const std::size_t s = assign_scale(b, model_);
    const auto g = static_cast<float>(grids[s]);
    const auto col = std::min<std::size_t>(grids[s] - 1,
                                           static_cast<std::size_t>(std::max(0.0f, b.x * g)));
    const auto row = std::min<std::size_t>(grids[s] - 1,
                                           static_cast<std::size_t>(std::max(0.0f, b.y * g)));
    Tensor& t = out.scales[s];
    t(row, col, 0) = b.x * g - static_cast<float>(col);
    t(row, col, 1) = b.y * g - static_cast<float>(row);
    t(row, col, 2) = b.w;
    t(row, col, 3) = b.h;
    t(row, col, kObjectnessChannel) = logit;
    for (std::size_t c = 0; c < model_.classes; ++c) {
      t(row, col, kClassOffset + c) = static_cast<int>(c) == b.class_id ? 1.0f : 0.0f;
    }
  }

  if (config_.noise_amplitude > 0.0f) {
    std::uint64_t h = kFnvOffset;
    fnv_mix(h, frame.data());
    std::mt19937_64 rng(h);
    std::uniform_real_distribution<float> u(-1.0f, 1.0f);
    const float box_amp = 0.2f * config_.noise_amplitude;
    for (Tensor& t : out.scales) {
      const std::size_t cells = t.size() / d;
      for (std::size_t i = 0; i < cells; ++i) {
        for (std::size_t o = 0; o < d; ++o) {
          const float amp = o < kBoxChannels ? box_amp : config_.noise_amplitude;
          t[i * d + o] += amp * u(rng);
        }
      }
    }
  }
  return out;
}

std::uint64_t OracleModel::forward_macs(std::uint64_t student_macs) const noexcept {
  const double ratio = static_cast<double>(config_.layer_count) /
                       static_cast<double>(StudentModel::layer_count()) *
                       config_.width_multiplier;
  return static_cast<std::uint64_t>(std::llround(static_cast<double>(student_macs) * ratio));
}

// ---------------------------------------------------------------------------
// Distillation

double distill_loss(const DetectionTensorSet& student, const DetectionTensorSet& oracle) {
  double sum = 0.0;
  for (std::size_t s = 0; s < kNumScales; ++s) {
    sum += l2_sq_distance(student.scales[s], oracle.scales[s]);
  }
  return sum;
}

std::vector<Tensor> distill_gradient(const StudentModel& model, const FeatureMaps& features,
                                     const DecoderWeights& adaptive,
                                     const DetectionTensorSet& target) {
  const DetectionTensorSet out = model.forward(features, adaptive);
  for (std::size_t s = 0; s < kNumScales; ++s) {
    require_same_shape(out.scales[s], target.scales[s], "distill_gradient");
  }
  const auto& cfg = model.config();
  const auto grids = cfg.grid_sizes();
  const std::size_t k = cfg.head_inputs();
  const std::size_t d = cfg.cell_channels();

  std::vector<Tensor> grads;
  for (const Tensor& b : adaptive.blocks) grads.emplace_back(b.shape());

  std::vector<float> resid(d);
  for (std::size_t s = 0; s < kNumScales; ++s) {
    const std::size_t g = grids[s];
    Tensor& grad = grads[s];
    for (std::size_t r = 0; r < g; ++r) {
      for (std::size_t c = 0; c < g; ++c) {
        const std::size_t cell = r * g + c;
        for (std::size_t o = 0; o < d; ++o) {
          resid[o] = 2.0f * (out.scales[s](r, c, o) - target.scales[s](r, c, o));
        }
        for (std::size_t o = 0; o < d; ++o) {
          for (std::size_t j = 0; j < k; ++j) grad(j, o) += features.scales[s](r, c, j) * resid[o];
          grad(k + cell, o) += kOffsetGain * resid[o];
          grad(k + g * g, o) += kOffsetGain * resid[o];
        }
        if (s == 0) {
          Tensor& small = grads[kNumScales];
          for (std::size_t j = 0; j < kFineChannels; ++j) {
            const float f = features.fine(r, c, j);
            for (std::size_t o = 0; o < d; ++o) small(j, o) += f * resid[o];
          }
        }
      }
    }
  }
  return grads;
}

AdaptResult adapt_decoder(const StudentModel& model, const Tensor& frame,
                          const DetectionTensorSet& oracle_out, std::size_t steps,
                          const AdamConfig& adam) {
  if (steps == 0) throw Error(Errc::invalid_argument, "adapt_decoder: steps must be >= 1");
  const Shape expected{model.config().input_size, model.config().input_size, 3};
  if (frame.shape() != expected) {
    throw Error(Errc::shape_mismatch, "adapt_decoder: frame shape does not match model input");
  }
  const FeatureMaps features = model.extractor().extract(frame);
  DecoderWeights w = *model.adaptive();

  std::vector<AdamState> states;
  for (const Tensor& b : w.blocks) states.push_back(AdamState::for_param(b, adam));

  auto check = [](double loss) {
    if (!std::isfinite(loss)) throw Error(Errc::non_finite, "adapt_decoder: loss is not finite");
    return loss;
  };

  AdaptResult result;
  result.initial_loss = check(distill_loss(model.forward(features, w), oracle_out));
  for (std::size_t step = 0; step < steps; ++step) {
    const auto grads = distill_gradient(model, features, w, oracle_out);
    for (std::size_t b = 0; b < w.blocks.size(); ++b) {
      w.blocks[b] = adam_step(w.blocks[b], grads[b], states[b]);
    }
  }
  result.final_loss = check(distill_loss(model.forward(features, w), oracle_out));
  w.version += 1;
  w.precision = Precision::full;
  result.weights = std::move(w);
  return result;
}

}  // namespace edgekt
