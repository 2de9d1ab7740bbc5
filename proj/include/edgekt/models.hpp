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
#include <memory>
#include <mutex>
#include <span>
#include <vector>

#include "edgekt/detection.hpp"
#include "edgekt/tensor.hpp"

namespace edgekt {

struct FrameEvent;

enum class Precision : std::uint8_t { full = 0, half = 1 };

const char* precision_name(Precision p) noexcept;

struct ModelConfig {
  std::size_t input_size = 64;  // square H == W, multiple of 32
  std::size_t classes = 3;
  std::size_t feature_channels = 16;
  std::uint64_t seed = 42;

  std::array<std::size_t, kNumScales> grid_sizes() const noexcept {
    return {input_size / 8, input_size / 16, input_size / 32};
  }
  std::size_t cell_channels() const noexcept { return edgekt::cell_channels(classes); }
  /// Width of a head's per-cell input: K channels at each context tap.
  std::size_t head_inputs() const noexcept;
  void validate() const;
};

// Number of handcrafted descriptors per 4x4 block in the first stage.
inline constexpr std::size_t kBlockDescriptors = 6;
// Fine (pre-pooling) features seen by the small-object layer: 2x2 blocks.
inline constexpr std::size_t kFineChannels = 4 * kBlockDescriptors;
// Pooled raw descriptors carried through stage two unchanged.
inline constexpr std::size_t kPooledChannels = kBlockDescriptors;
// Heads read a cell plus its four direct neighbours.
inline constexpr std::size_t kContextTaps = 5;

inline std::size_t ModelConfig::head_inputs() const noexcept {
  return kContextTaps * feature_channels;
}

/// Feature maps shared by every head.
struct FeatureMaps {
  std::array<Tensor, kNumScales> scales;  // G_i x G_i x (5 K), with context
  Tensor fine;                            // G_1 x G_1 x kFineChannels
};

/// Frozen two-stage extractor. Stage one turns each 4x4 pixel block into
/// colour, gradient and contrast descriptors; stage two is a 2x2 stride-2
/// projection with ReLU. Coarser scales average-pool stage two.
class FeatureExtractor {
 public:
  FeatureExtractor() = default;
  explicit FeatureExtractor(const ModelConfig& config);

  FeatureMaps extract(const Tensor& frame) const;

  const Tensor& projection() const noexcept { return projection_; }
  const Tensor& bias() const noexcept { return bias_; }
  std::size_t channels() const noexcept { return channels_; }

  /// Fits a frozen per-channel centre and scale on `frames` so that the
  /// maps handed to the heads are roughly zero-mean and unit-variance.
  void fit_normalization(std::span<const FrameEvent> frames);
  /// Centre then scale, for pooled channels followed by fine channels.
  /// Empty until fit_normalization runs.
  const Tensor& normalization() const noexcept { return norm_; }

  /// Multiply-accumulate count of one extraction.
  std::uint64_t macs() const noexcept;

 private:
  std::size_t input_size_ = 0;
  std::size_t channels_ = 0;
  Tensor projection_;  // (K - kPooledChannels) x kFineChannels
  Tensor bias_;        // K - kPooledChannels
  Tensor norm_;        // 2 x (K + kFineChannels)
};

/// Frozen linear heads, one (5K + 1) x D matrix per scale (last row is bias).
struct GeneralDecoder {
  std::array<Tensor, kNumScales> heads;
};

/// Versioned parameter block of the adaptive decoder. Blocks 0..2 are the
/// per-scale heads shaped (5K + G_i^2 + 1) x D: content weights, a per-cell
/// offset table, then a bias row. Block 3 is the small-object layer,
/// kFineChannels x D, added to scale 0.
struct DecoderWeights {
  std::uint64_t version = 1;
  std::vector<Tensor> blocks;
  Precision precision = Precision::full;

  friend bool operator==(const DecoderWeights&, const DecoderWeights&) = default;
};

inline constexpr std::size_t kAdaptiveBlocks = kNumScales + 1;

std::vector<Shape> adaptive_block_shapes(const ModelConfig& config);

/// Returns `w` with every block rounded through binary16 and the precision
/// tag set to half.
DecoderWeights to_half_precision(const DecoderWeights& w);

/// version (u64 LE) | precision (u8) | per block: rank (u8), dims (u32 LE),
/// payload (f32 LE, or binary16 LE when precision is half).
std::vector<std::uint8_t> encode_decoder_weights(const DecoderWeights& w);
DecoderWeights decode_decoder_weights(std::span<const std::uint8_t> bytes);

class StudentModel {
 public:
  StudentModel(ModelConfig config, FeatureExtractor extractor, GeneralDecoder general);

  StudentModel(const StudentModel& other);
  StudentModel& operator=(const StudentModel& other);

  const ModelConfig& config() const noexcept { return config_; }
  const FeatureExtractor& extractor() const noexcept { return extractor_; }
  const GeneralDecoder& general() const noexcept { return general_; }

  /// Snapshot of the current adaptive decoder. Callers keep using the
  /// snapshot even if a swap happens meanwhile.
  std::shared_ptr<const DecoderWeights> adaptive() const;
  std::uint64_t version() const;

  DetectionTensorSet forward(const Tensor& frame) const;
  DetectionTensorSet forward(const FeatureMaps& features,
                             const DecoderWeights& adaptive) const;

  /// Atomically installs `weights`. Throws Errc::stale_version (model left
  /// untouched) unless weights.version > version(), and Errc::shape_mismatch
  /// for blocks that do not match the decoder layout.
  void swap_decoder(DecoderWeights weights);

  /// Hash of extractor and general decoder parameters.
  std::uint64_t frozen_checksum() const;

  /// Layer count used for the oracle depth constraint.
  static constexpr std::size_t layer_count() noexcept { return 4; }
  std::uint64_t forward_macs() const noexcept;

 private:
  void check_frame(const Tensor& frame) const;

  ModelConfig config_;
  FeatureExtractor extractor_;
  GeneralDecoder general_;
  mutable std::mutex slot_mutex_;
  std::shared_ptr<const DecoderWeights> adaptive_;
};

/// Least-squares fit of the general decoder on labelled frames (ridge
/// regression on the extractor's features towards the oracle's targets).
GeneralDecoder fit_general_decoder(const ModelConfig& config,
                                   const FeatureExtractor& extractor,
                                   std::span<const FrameEvent> corpus,
                                   double ridge = 1e-2, double positive_weight = 1.0);

/// Extractor + general decoder fitted on the built-in pretraining corpus.
StudentModel make_pretrained_student(const ModelConfig& config);

struct OracleConfig {
  std::size_t layer_count = 10;
  double width_multiplier = 1.45;
  float noise_amplitude = 0.01f;
  float objectness_logit = 2.0f;
};

/// Stand-in for the deep detector: encodes ground truth into the detection
/// tensor layout plus deterministic low-amplitude noise keyed on the frame
/// content.
class OracleModel {
 public:
  OracleModel(ModelConfig model, OracleConfig config = {});

  DetectionTensorSet forward(const Tensor& frame, const std::vector<Box>& truth) const;

  const ModelConfig& model_config() const noexcept { return model_; }
  const OracleConfig& config() const noexcept { return config_; }
  std::size_t layer_count() const noexcept { return config_.layer_count; }
  /// Nominal multiply-accumulate count of a deep forward pass.
  std::uint64_t forward_macs(std::uint64_t student_macs) const noexcept;

 private:
  ModelConfig model_;
  OracleConfig config_;
};

/// Scale a box of the given size is assigned to: the finest grid on which it
/// spans at most two cells.
std::size_t assign_scale(const Box& box, const ModelConfig& config) noexcept;

/// Sum over the three scales of the squared L2 distance.
double distill_loss(const DetectionTensorSet& student, const DetectionTensorSet& oracle);

/// d(distill_loss)/d(adaptive blocks) at the given weights.
std::vector<Tensor> distill_gradient(const StudentModel& model, const FeatureMaps& features,
                                     const DecoderWeights& adaptive,
                                     const DetectionTensorSet& target);

struct AdaptConfig {
  std::size_t steps = 20;
  AdamConfig adam{.lr = 0.002};
};

struct AdaptResult {
  DecoderWeights weights;
  double initial_loss = 0.0;
  double final_loss = 0.0;
};

/// Runs `steps` Adam iterations on the adaptive decoder only, starting from
/// the model's current weights with fresh optimizer moments. The result has
/// version = current + 1; final_loss is evaluated after the last update.
/// Throws Errc::non_finite if the loss diverges.
AdaptResult adapt_decoder(const StudentModel& model, const Tensor& frame,
                          const DetectionTensorSet& oracle_out, std::size_t steps,
                          const AdamConfig& adam = AdaptConfig{}.adam);

}  // namespace edgekt
