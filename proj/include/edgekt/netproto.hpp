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

#include <condition_variable>
#include <cstddef>
#include <cstdint>
#include <deque>
#include <mutex>
#include <optional>
#include <random>
#include <span>
#include <utility>
#include <variant>
#include <vector>

#include "edgekt/models.hpp"
#include "edgekt/tensor.hpp"

namespace edgekt {

// Framing: magic 'E','K','T','P' | type u8 | body length u32 LE | body.
inline constexpr std::uint8_t kMagic[4] = {'E', 'K', 'T', 'P'};
inline constexpr std::size_t kFrameHeaderBytes = 9;

enum class MessageType : std::uint8_t { frame_upload = 1, weight_update = 2, ack = 3 };

enum class AckStatus : std::uint8_t { ok = 0, error = 1 };

/// Input tensor sent to the edge. Body: frame_id u64 | precision u8 |
/// rank u32 | dims u32 x rank | elements (f32 or binary16).
struct FrameUpload {
  std::uint64_t frame_id = 0;
  Precision precision = Precision::full;
  Tensor payload;

  friend bool operator==(const FrameUpload&, const FrameUpload&) = default;
};

/// Adapted decoder sent back. Body: frame_id u64 | final_loss f64 |
/// encoded DecoderWeights (to the end of the body).
struct WeightUpdate {
  std::uint64_t frame_id = 0;
  double final_loss = 0.0;
  DecoderWeights weights;

  friend bool operator==(const WeightUpdate&, const WeightUpdate&) = default;
};

struct Ack {
  std::uint64_t frame_id = 0;
  AckStatus status = AckStatus::ok;

  friend bool operator==(const Ack&, const Ack&) = default;
};

using Message = std::variant<FrameUpload, WeightUpdate, Ack>;

MessageType message_type(const Message& m) noexcept;
std::uint64_t message_frame_id(const Message& m) noexcept;

/// Half-precision payloads are rounded through binary16; everything else is
/// bit exact.
std::vector<std::uint8_t> encode_message(const Message& m);

/// Throws Errc::bad_magic, Errc::truncated or Errc::unknown_type for broken
/// framing, Errc::invalid_argument for a malformed body.
Message decode_message(std::span<const std::uint8_t> bytes);

/// Number of bytes encode_message(m) produces, without encoding.
std::size_t encoded_size(const Message& m);

// ---------------------------------------------------------------------------
// Simulated channel

struct JitterSpec {
  enum class Kind { none, lognormal };
  Kind kind = Kind::none;
  double median_s = 0.0;
  double sigma_log = 0.0;
};

struct OutageWindow {
  double start_s = 0.0;
  double end_s = 0.0;  // exclusive
};

struct ChannelConfig {
  double bandwidth_bps = 100e6;
  double base_latency_s = 0.2e-3;
  JitterSpec jitter;
  std::uint64_t seed = 1;
  /// Deliver instantly with zero serialization time. Used to check that
  /// training results do not depend on where they are computed.
  bool zero_cost = false;
  /// Sends starting inside a window fail with Errc::channel_outage.
  std::vector<OutageWindow> outages;

  void validate() const;

  static ChannelConfig lan();
  static ChannelConfig wifi();
  static ChannelConfig instant();
};

struct Delivery {
  double send_time = 0.0;
  double serialization_s = 0.0;  // size_bits / bandwidth
  double delivery_time = 0.0;
  std::size_t bytes = 0;
};

/// One direction of a link. Delivery times follow
/// now + base_latency + jitter + bits / bandwidth, clamped so that messages
/// arrive in the order they were sent. The byte queue is safe for one
/// producer thread and one consumer thread.
class SimChannel {
 public:
  explicit SimChannel(ChannelConfig config = ChannelConfig::lan());

  const ChannelConfig& config() const noexcept { return config_; }

  /// Timing of a message of `bytes` bytes sent at `now`. Advances the jitter
  /// stream and the FIFO clamp.
  Delivery transmit(std::size_t bytes, double now);

  /// Encodes, times and enqueues `m`.
  Delivery send(const Message& m, double now);

  /// Blocks until a message is queued or the channel is closed.
  std::optional<std::pair<Delivery, std::vector<std::uint8_t>>> receive();
  std::optional<std::pair<Delivery, std::vector<std::uint8_t>>> try_receive();

  void close();

 private:
  double jitter_draw();

  ChannelConfig config_;
  std::mt19937_64 rng_;
  double last_delivery_ = 0.0;

  std::mutex mutex_;
  std::condition_variable ready_;
  std::deque<std::pair<Delivery, std::vector<std::uint8_t>>> queue_;
  bool closed_ = false;
};

}  // namespace edgekt
