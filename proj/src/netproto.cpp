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

#include "edgekt/netproto.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <numbers>

#include "bytes.hpp"
#include "edgekt/error.hpp"

namespace edgekt {

using detail::ByteReader;
using detail::put_u32;
using detail::put_u64;

namespace {

std::size_t element_bytes(Precision p) { return p == Precision::half ? 2 : 4; }

void encode_body(const FrameUpload& m, std::vector<std::uint8_t>& out) {
  put_u64(out, m.frame_id);
  out.push_back(static_cast<std::uint8_t>(m.precision));
  put_u32(out, static_cast<std::uint32_t>(m.payload.rank()));
  for (std::size_t d : m.payload.shape()) put_u32(out, static_cast<std::uint32_t>(d));
  if (m.precision == Precision::half) {
    const auto bytes = f16_encode(m.payload);
    out.insert(out.end(), bytes.begin(), bytes.end());
  } else {
    for (float v : m.payload.data()) put_u32(out, std::bit_cast<std::uint32_t>(v));
  }
}

void encode_body(const WeightUpdate& m, std::vector<std::uint8_t>& out) {
  put_u64(out, m.frame_id);
  put_u64(out, std::bit_cast<std::uint64_t>(m.final_loss));
  const auto blob = encode_decoder_weights(m.weights);
  out.insert(out.end(), blob.begin(), blob.end());
}

void encode_body(const Ack& m, std::vector<std::uint8_t>& out) {
  put_u64(out, m.frame_id);
  out.push_back(static_cast<std::uint8_t>(m.status));
}

Precision precision_tag(std::uint8_t tag) {
  if (tag > 1) throw Error(Errc::invalid_argument, "message: unknown precision tag");
  return static_cast<Precision>(tag);
}

FrameUpload decode_upload(ByteReader& in) {
  FrameUpload m;
  m.frame_id = in.u64();
  m.precision = precision_tag(in.u8());
  const std::uint32_t rank = in.u32();
  if (rank > in.remaining() / 4) throw Error(Errc::truncated, "frame upload: truncated shape");
  Shape shape(rank);
  for (std::size_t& d : shape) d = in.u32();
  const std::size_t n = shape_volume(shape);
  const std::size_t want = n * element_bytes(m.precision);
  if (in.remaining() != want) {
    throw Error(in.remaining() < want ? Errc::truncated : Errc::invalid_argument,
                "frame upload: payload length does not match shape");
  }
  if (m.precision == Precision::half) {
    m.payload = f16_decode(in.take(want), shape);
  } else {
    std::vector<float> data(n);
    for (float& v : data) v = std::bit_cast<float>(in.u32());
    m.payload = Tensor(std::move(shape), std::move(data));
  }
  return m;
}

WeightUpdate decode_update(ByteReader& in) {
  WeightUpdate m;
  m.frame_id = in.u64();
  m.final_loss = std::bit_cast<double>(in.u64());
  m.weights = decode_decoder_weights(in.rest());
  return m;
}

Ack decode_ack(ByteReader& in) {
  Ack m;
  m.frame_id = in.u64();
  const std::uint8_t status = in.u8();
  if (status > 1) throw Error(Errc::invalid_argument, "ack: unknown status");
  m.status = static_cast<AckStatus>(status);
  if (!in.done()) throw Error(Errc::invalid_argument, "ack: trailing bytes");
  return m;
}

std::size_t weights_blob_size(const DecoderWeights& w) {
  std::size_t n = 9;
  for (const Tensor& b : w.blocks) n += 1 + 4 * b.rank() + b.size() * element_bytes(w.precision);
  return n;
}

}  // namespace

MessageType message_type(const Message& m) noexcept {
  switch (m.index()) {
    case 0: return MessageType::frame_upload;
    case 1: return MessageType::weight_update;
    default: return MessageType::ack;
  }
}

std::uint64_t message_frame_id(const Message& m) noexcept {
  return std::visit([](const auto& v) { return v.frame_id; }, m);
}

std::vector<std::uint8_t> encode_message(const Message& m) {
  std::vector<std::uint8_t> out(std::begin(kMagic), std::end(kMagic));
  out.reserve(encoded_size(m));
  out.push_back(static_cast<std::uint8_t>(message_type(m)));
  put_u32(out, 0);
  std::visit([&out](const auto& v) { encode_body(v, out); }, m);
  const std::size_t body = out.size() - kFrameHeaderBytes;
  if (body > UINT32_MAX) throw Error(Errc::invalid_argument, "message body exceeds 4 GiB");
  for (int i = 0; i < 4; ++i) out[5 + i] = static_cast<std::uint8_t>(body >> (8 * i));
  return out;
}

Message decode_message(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < kFrameHeaderBytes) {
    if (bytes.size() >= 4 && std::memcmp(bytes.data(), kMagic, 4) != 0) {
      throw Error(Errc::bad_magic, "message: bad magic");
    }
    throw Error(Errc::truncated, "message: truncated header");
  }
  if (std::memcmp(bytes.data(), kMagic, 4) != 0) throw Error(Errc::bad_magic, "message: bad magic");
  ByteReader header(bytes.subspan(4, 5), "message header");
  const std::uint8_t type = header.u8();
  const std::uint32_t length = header.u32();
  if (type < 1 || type > 3) throw Error(Errc::unknown_type, "message: unknown type");
  const auto rest = bytes.subspan(kFrameHeaderBytes);
  if (rest.size() < length) throw Error(Errc::truncated, "message: truncated body");
  if (rest.size() > length) throw Error(Errc::invalid_argument, "message: trailing bytes after body");
  ByteReader in(rest, "message body");
  switch (static_cast<MessageType>(type)) {
    case MessageType::frame_upload: return decode_upload(in);
    case MessageType::weight_update: return decode_update(in);
    case MessageType::ack: return decode_ack(in);
  }
  throw Error(Errc::unknown_type, "message: unknown type");
}

std::size_t encoded_size(const Message& m) {
  struct Sizer {
    std::size_t operator()(const FrameUpload& u) const {
      return 8 + 1 + 4 + 4 * u.payload.rank() + u.payload.size() * element_bytes(u.precision);
    }
    std::size_t operator()(const WeightUpdate& u) const { return 16 + weights_blob_size(u.weights); }
    std::size_t operator()(const Ack&) const { return 9; }
  };
  return kFrameHeaderBytes + std::visit(Sizer{}, m);
}

// ---------------------------------------------------------------------------

void ChannelConfig::validate() const {
  if (!(bandwidth_bps > 0.0)) throw Error(Errc::config, "channel bandwidth must be > 0");
  if (!(base_latency_s >= 0.0)) throw Error(Errc::config, "channel latency must be >= 0");
  if (jitter.kind == JitterSpec::Kind::lognormal &&
      (!(jitter.median_s > 0.0) || !(jitter.sigma_log >= 0.0))) {
    throw Error(Errc::config, "lognormal jitter needs median > 0 and sigma >= 0");
  }
  for (const OutageWindow& w : outages) {
    if (!(w.end_s >= w.start_s)) throw Error(Errc::config, "outage window ends before it starts");
  }
}

ChannelConfig ChannelConfig::lan() {
  return ChannelConfig{};
}

ChannelConfig ChannelConfig::wifi() {
  ChannelConfig c;
  c.bandwidth_bps = 13e6;
  c.base_latency_s = 1e-3;
  c.jitter = {JitterSpec::Kind::lognormal, 5e-3, 0.5};
  return c;
}

ChannelConfig ChannelConfig::instant() {
  ChannelConfig c;
  c.base_latency_s = 0.0;
  c.zero_cost = true;
  return c;
}

SimChannel::SimChannel(ChannelConfig config) : config_(std::move(config)), rng_(config_.seed) {
  config_.validate();
}

double SimChannel::jitter_draw() {
  if (config_.jitter.kind == JitterSpec::Kind::none) return 0.0;
  // Box-Muller on the raw engine keeps the stream identical across
  // standard libraries.
  auto uniform = [this] { return (static_cast<double>(rng_() >> 11) + 0.5) * 0x1.0p-53; };
  const double u1 = uniform();
  const double u2 = uniform();
  const double z = std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  return config_.jitter.median_s * std::exp(config_.jitter.sigma_log * z);
}

Delivery SimChannel::transmit(std::size_t bytes, double now) {
  for (const OutageWindow& w : config_.outages) {
    if (now >= w.start_s && now < w.end_s) {
      throw Error(Errc::channel_outage, "channel outage");
    }
  }
  Delivery d;
  d.send_time = now;
  d.bytes = bytes;
  if (config_.zero_cost) {
    d.delivery_time = std::max(now, last_delivery_);
  } else {
    d.serialization_s = static_cast<double>(bytes) * 8.0 / config_.bandwidth_bps;
    const double t = now + config_.base_latency_s + jitter_draw() + d.serialization_s;
    d.delivery_time = std::max(t, last_delivery_);
  }
  last_delivery_ = d.delivery_time;
  return d;
}

Delivery SimChannel::send(const Message& m, double now) {
  auto bytes = encode_message(m);
  const Delivery d = transmit(bytes.size(), now);
  {
    std::lock_guard lock(mutex_);
    queue_.emplace_back(d, std::move(bytes));
  }
  ready_.notify_one();
  return d;
}

std::optional<std::pair<Delivery, std::vector<std::uint8_t>>> SimChannel::receive() {
  std::unique_lock lock(mutex_);
  ready_.wait(lock, [this] { return closed_ || !queue_.empty(); });
  if (queue_.empty()) return std::nullopt;
  auto item = std::move(queue_.front());
  queue_.pop_front();
  return item;
}

std::optional<std::pair<Delivery, std::vector<std::uint8_t>>> SimChannel::try_receive() {
  std::lock_guard lock(mutex_);
  if (queue_.empty()) return std::nullopt;
  auto item = std::move(queue_.front());
  queue_.pop_front();
  return item;
}

void SimChannel::close() {
  {
    std::lock_guard lock(mutex_);
    closed_ = true;
  }
  ready_.notify_all();
}

}  // namespace edgekt
