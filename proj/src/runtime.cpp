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

#include "edgekt/runtime.hpp"

#include <algorithm>
#include <string>
#include <utility>

#include "edgekt/error.hpp"
#include "log.hpp"

namespace edgekt {

using detail::log;
using detail::LogLevel;

namespace {

/// Oracle pass plus `steps` adaptation steps on user-end hardware.
double training_seconds(const CostModel& cost, const StudentModel& student,
                        const OracleModel& oracle, std::size_t steps) {
  const double oracle_s = cost.compute_seconds(oracle.forward_macs(student.forward_macs()));
  const double step_s = cost.train_step_fraction * cost.compute_seconds(student.forward_macs());
  return oracle_s + static_cast<double>(steps) * step_s;
}

/// Length of the union of `intervals` (of one kind) clipped to [a, b].
double covered(std::vector<BusyInterval> intervals, bool radio, double a, double b) {
  std::erase_if(intervals, [radio](const BusyInterval& i) { return i.radio != radio; });
  std::sort(intervals.begin(), intervals.end(),
            [](const BusyInterval& x, const BusyInterval& y) { return x.start < y.start; });
  double total = 0.0;
  double cursor = a;
  for (const BusyInterval& i : intervals) {
    const double lo = std::max(i.start, cursor);
    const double hi = std::min(i.end, b);
    if (hi > lo) {
      total += hi - lo;
      cursor = hi;
    }
  }
  return total;
}

}  // namespace

const char* mode_name(Mode m) noexcept {
  switch (m) {
    case Mode::no_training: return "no_training";
    case Mode::local_training: return "local_training";
    case Mode::network_training: return "network_training";
    case Mode::hybrid: return "hybrid";
    case Mode::oracle_only: return "oracle_only";
  }
  return "no_training";
}

Mode mode_from_string(std::string_view name) {
  for (Mode m : {Mode::no_training, Mode::local_training, Mode::network_training, Mode::hybrid,
                 Mode::oracle_only}) {
    if (name == mode_name(m)) return m;
  }
  throw Error(Errc::config, "unknown mode '" + std::string(name) + "'");
}

void ScenarioConfig::validate() const {
  if ((mode == Mode::network_training || mode == Mode::hybrid) && !channel) {
    throw Error(Errc::config, "network training needs a channel");
  }
  if (channel) channel->validate();
  if (adapt.steps == 0) throw Error(Errc::config, "adaptation steps must be > 0");
  if (!(adapt.adam.lr > 0.0)) throw Error(Errc::config, "adaptation learning rate must be > 0");
  selector.validate();
  cost.validate();
  model.validate();
  if (oracle.layer_count < 2 * StudentModel::layer_count()) {
    throw Error(Errc::config, "oracle must be at least twice as deep as the student");
  }
}

// ---------------------------------------------------------------------------
// EdgeNode

EdgeNode::EdgeNode(StudentModel clone, OracleModel oracle, TruthProvider truth, AdaptConfig adapt)
    : clone_(std::move(clone)), oracle_(std::move(oracle)), truth_(std::move(truth)), adapt_(adapt) {}

Message EdgeNode::edge_serve(const Message& m) {
  if (const auto* up = std::get_if<FrameUpload>(&m)) {
    try {
      const DetectionTensorSet target = oracle_.forward(up->payload, truth_(up->frame_id));
      AdaptResult res =
          adapt_decoder(clone_, up->payload, target, adapt_.steps, adapt_.adam);
      DecoderWeights w = up->precision == Precision::half ? to_half_precision(res.weights)
                                                          : std::move(res.weights);
      clone_.swap_decoder(w);
      return WeightUpdate{up->frame_id, res.final_loss, std::move(w)};
    } catch (const Error& e) {
      log(LogLevel::warn, std::string("edge: training failed: ") + e.what());
      return Ack{up->frame_id, AckStatus::error};
    }
  }
  if (const auto* wu = std::get_if<WeightUpdate>(&m)) {
    try {
      clone_.swap_decoder(wu->weights);
      return Ack{wu->frame_id, AckStatus::ok};
    } catch (const Error& e) {
      log(LogLevel::warn, std::string("edge: clone sync rejected: ") + e.what());
      return Ack{wu->frame_id, AckStatus::error};
    }
  }
  return Ack{message_frame_id(m), AckStatus::error};
}

Message EdgeNode::edge_serve(std::span<const std::uint8_t> bytes) {
  Message m;
  try {
    m = decode_message(bytes);
  } catch (const Error& e) {
    log(LogLevel::warn, std::string("edge: malformed message: ") + e.what());
    return Ack{0, AckStatus::error};
  }
  return edge_serve(m);
}

void EdgeNode::serve(SimChannel& uplink, SimChannel& downlink, const CostModel& cost) {
  const double job_s =
      training_seconds(cost, clone_, oracle_, adapt_.steps) / cost.edge_speedup;
  while (auto item = uplink.receive()) {
    const Message reply = edge_serve(item->second);
    const double compute = std::holds_alternative<WeightUpdate>(reply) ? job_s : 0.0;
    downlink.send(reply, item->first.delivery_time + compute);
  }
}

// ---------------------------------------------------------------------------
// Runtime

Runtime::Runtime(ScenarioConfig config, const StudentModel& pretrained, TruthProvider truth)
    : config_(std::move(config)),
      student_(pretrained),
      oracle_(config_.model, config_.oracle),
      truth_(std::move(truth)),
      selector_(config_.selector),
      ledger_(config_.cost.power) {
  config_.validate();
  if (config_.mode == Mode::network_training || config_.mode == Mode::hybrid) {
    uplink_ = std::make_unique<SimChannel>(*config_.channel);
    ChannelConfig down = *config_.channel;
    down.seed = config_.channel->seed ^ 0x9e3779b97f4a7c15ULL;
    down.outages.clear();
    downlink_ = std::make_unique<SimChannel>(down);
    edge_ = std::make_unique<EdgeNode>(student_, oracle_, truth_, config_.adapt);
    edge_thread_ = std::thread([this] { edge_->serve(*uplink_, *downlink_, config_.cost); });
  }
  if (config_.trains()) dispatcher_ = std::thread([this] { dispatcher_loop(); });
}

Runtime::~Runtime() {
  try {
    finish();
  } catch (const std::exception& e) {
    log(LogLevel::error, std::string("runtime shutdown: ") + e.what());
  }
  // finish() may have thrown before the threads were stopped.
  requests_.close();
  if (dispatcher_.joinable()) dispatcher_.join();
  if (uplink_) uplink_->close();
  if (edge_thread_.joinable()) edge_thread_.join();
}

double Runtime::local_job_seconds() const {
  return training_seconds(config_.cost, student_, oracle_, config_.adapt.steps);
}

double Runtime::edge_job_seconds() const {
  return local_job_seconds() / config_.cost.edge_speedup;
}

void Runtime::dispatcher_loop() {
  while (auto r = requests_.pop()) {
    outcomes_.push(r->remote ? run_remote(*r) : run_local(*r));
  }
}

TrainOutcome Runtime::run_local(const TrainRequest& r) {
  TrainOutcome o;
  o.job_id = r.job_id;
  o.frame_id = r.frame_id;
  o.dispatch_time = r.dispatch_time;
  const CostModel& cost = config_.cost;
  o.oracle_s = cost.compute_seconds(oracle_.forward_macs(student_.forward_macs()));
  o.train_s = local_job_seconds() - o.oracle_s;
  o.completion_time = r.dispatch_time + local_job_seconds();
  try {
    const DetectionTensorSet target = oracle_.forward(r.frame, truth_(r.frame_id));
    AdaptResult res =
        adapt_decoder(student_, r.frame, target, config_.adapt.steps, config_.adapt.adam);
    o.ok = true;
    o.initial_loss = res.initial_loss;
    o.final_loss = res.final_loss;
    o.weights = std::move(res.weights);
  } catch (const Error& e) {
    o.error = e.what();
  }
  return o;
}

TrainOutcome Runtime::run_remote(const TrainRequest& r) {
  TrainOutcome o;
  o.job_id = r.job_id;
  o.frame_id = r.frame_id;
  o.dispatch_time = r.dispatch_time;
  o.remote = true;
  o.completion_time = r.dispatch_time;
  try {
    if (r.resync) {
      WeightUpdate sync{r.frame_id, 0.0, *student_.adaptive()};
      o.uploads.push_back(uplink_->send(sync, r.dispatch_time));
    }
    const FrameUpload up{r.frame_id, config_.precision, r.frame};
    o.uploads.push_back(uplink_->send(up, r.dispatch_time));
    for (std::size_t expected = o.uploads.size(); expected > 0; --expected) {
      auto item = downlink_->receive();
      if (!item) throw Error(Errc::io, "downlink closed");
      o.downloads.push_back(item->first);
      o.completion_time = item->first.delivery_time;
      const Message reply = decode_message(item->second);
      if (const auto* wu = std::get_if<WeightUpdate>(&reply)) {
        o.ok = true;
        o.final_loss = wu->final_loss;
        o.weights = wu->weights;
      } else if (std::get<Ack>(reply).status != AckStatus::ok) {
        o.error = "edge answered with an error";
      }
    }
    if (!o.error.empty()) o.ok = false;
  } catch (const Error& e) {
    o.ok = false;
    o.error = e.what();
  }
  return o;
}

bool Runtime::choose_remote() const {
  if (config_.mode == Mode::network_training) return true;
  if (config_.mode != Mode::hybrid) return false;
  const ChannelConfig& ch = *config_.channel;
  if (ch.zero_cost) return edge_job_seconds() < local_job_seconds();
  const Tensor frame(Shape{config_.model.input_size, config_.model.input_size, 3});
  DecoderWeights w = *student_.adaptive();
  if (config_.precision == Precision::half) w.precision = Precision::half;
  const double bytes = static_cast<double>(encoded_size(FrameUpload{0, config_.precision, frame}) +
                                           encoded_size(WeightUpdate{0, 0.0, w}));
  double jitter = 0.0;
  if (ch.jitter.kind == JitterSpec::Kind::lognormal) jitter = ch.jitter.median_s;
  const double rtt = 2.0 * (ch.base_latency_s + jitter) + bytes * 8.0 / ch.bandwidth_bps +
                     edge_job_seconds();
  return rtt < local_job_seconds();
}

void Runtime::dispatch(const FrameEvent& event, double now) {
  InFlight f;
  f.request.job_id = next_job_id_++;
  f.request.frame_id = event.frame_id;
  f.request.frame = event.frame;
  f.request.dispatch_time = now;
  f.request.remote = choose_remote();
  f.request.resync = f.request.remote && student_.version() != edge_version_;
  if (f.request.remote) {
    const ChannelConfig& ch = *config_.channel;
    double ser = 0.0;
    double latency = 0.0;
    if (!ch.zero_cost) {
      std::size_t bytes =
          encoded_size(FrameUpload{event.frame_id, config_.precision, event.frame});
      f.known_intervals.push_back({now, now + static_cast<double>(bytes) * 8.0 / ch.bandwidth_bps, true});
      if (f.request.resync) {
        const std::size_t sync = encoded_size(WeightUpdate{0, 0.0, *student_.adaptive()});
        f.known_intervals.push_back({now, now + static_cast<double>(sync) * 8.0 / ch.bandwidth_bps, true});
        bytes += sync;
      }
      ser = static_cast<double>(bytes) * 8.0 / ch.bandwidth_bps;
      latency = ch.base_latency_s;
    }
    f.known_until = now + latency + ser + edge_job_seconds();
  } else {
    f.known_until = now + local_job_seconds();
    f.known_intervals.push_back({now, f.known_until, false});
  }
  const std::size_t n = ++in_flight_;
  if (n > max_in_flight_) max_in_flight_ = n;
  jobs_.max_in_flight = max_in_flight_;
  ++jobs_.dispatched;
  requests_.push(f.request);
  job_ = std::move(f);
}

void Runtime::resolve() {
  auto o = outcomes_.pop();
  if (!o || o->job_id != job_->request.job_id) {
    throw Error(Errc::invalid_argument, "training dispatcher lost a job");
  }
  job_->outcome = std::move(*o);
}

std::vector<BusyInterval> Runtime::intervals_of(const TrainOutcome& o) const {
  std::vector<BusyInterval> out;
  if (!o.remote) {
    out.push_back({o.dispatch_time, o.completion_time, false});
    return out;
  }
  for (const Delivery& d : o.uploads) {
    out.push_back({d.send_time, d.send_time + d.serialization_s, true});
  }
  for (const Delivery& d : o.downloads) {
    out.push_back({d.delivery_time - d.serialization_s, d.delivery_time, true});
  }
  return out;
}

void Runtime::book(const TrainOutcome& o, bool apply) {
  if (o.remote) {
    for (const Delivery& d : o.uploads) {
      ledger_.charge(Activity::transmit, d.serialization_s);
      jobs_.transmit_s += d.serialization_s;
      jobs_.upload_bytes += d.bytes;
    }
    for (const Delivery& d : o.downloads) {
      ledger_.charge(Activity::receive, d.serialization_s);
      jobs_.receive_s += d.serialization_s;
      jobs_.download_bytes += d.bytes;
    }
    if (o.ok) edge_version_ = o.weights->version;
  } else {
    ledger_.charge(Activity::oracle_local, o.oracle_s);
    ledger_.charge(Activity::train_local, o.train_s);
  }
  jobs_.total_training_s += o.completion_time - o.dispatch_time;
  if (o.ok) {
    ++jobs_.completed;
    jobs_.final_losses.push_back(o.final_loss);
    if (apply) {
      try {
        student_.swap_decoder(*o.weights);
        jobs_.weight_versions.push_back(o.weights->version);
      } catch (const Error& e) {
        ++jobs_.stale_swaps;
        log(LogLevel::warn, std::string("swap rejected: ") + e.what());
      }
    }
  } else {
    ++jobs_.failed;
    log(LogLevel::warn, "training job for frame " + std::to_string(o.frame_id) +
                            " failed: " + o.error);
  }
  selector_.complete(o.ok ? std::optional<double>(o.final_loss) : std::nullopt);
  --in_flight_;
}

void Runtime::settle(double now, StepResult& result) {
  if (!job_) return;
  if (!job_->outcome) {
    if (now < job_->known_until) return;
    resolve();
  }
  if (job_->outcome->completion_time > now) return;
  const std::uint64_t before = student_.version();
  book(*job_->outcome, true);
  if (student_.version() != before) result.swapped_to = student_.version();
  job_.reset();
}

StepResult Runtime::step(const FrameEvent& event) {
  if (finished_) throw Error(Errc::invalid_argument, "runtime already finished");
  const CostModel& cost = config_.cost;
  StepResult r;
  r.frame_id = event.frame_id;
  r.start_s = std::max(event.arrival_time, last_finish_);
  r.idle_s = std::max(0.0, event.arrival_time - last_finish_);
  if (r.idle_s > 0.0) ledger_.charge(Activity::idle, r.idle_s);
  r.decode_s = cost.decode_seconds(event.frame.size());
  ledger_.charge(Activity::decode, r.decode_s);
  const double t = r.start_s + r.decode_s;

  settle(t, r);
  if (config_.trains()) {
    const bool selected = config_.kfs_enabled ? selector_.select(event.frame)
                                              : selector_.select_unconditionally(event.frame);
    if (selected) {
      r.key_frame = true;
      key_frames_.push_back(event.frame_id);
      dispatch(event, t);
    }
  }

  const bool deep = config_.mode == Mode::oracle_only;
  const double base = deep ? cost.compute_seconds(oracle_.forward_macs(student_.forward_macs()))
                           : cost.compute_seconds(student_.forward_macs());
  std::vector<BusyInterval> background;
  if (job_) {
    if (!job_->outcome && t + base > job_->known_until) resolve();
    background = job_->outcome ? intervals_of(*job_->outcome) : job_->known_intervals;
  }
  const double train_frac = base > 0.0 ? covered(background, false, t, t + base) / base : 0.0;
  const double radio_frac = base > 0.0 ? covered(background, true, t, t + base) / base : 0.0;
  r.inference_s =
      base * (1.0 + cost.contention_train * train_frac + cost.contention_radio * radio_frac);

  const DetectionTensorSet out =
      deep ? oracle_.forward(event.frame, truth_(event.frame_id)) : student_.forward(event.frame);
  ledger_.charge(deep ? Activity::oracle_local : Activity::inference, r.inference_s);
  const std::vector<Box> candidates = decode_boxes(out);
  r.candidates = candidates.size();
  r.detections = nms(candidates);
  r.nms_s = cost.nms_seconds(r.candidates);
  ledger_.charge(Activity::nms, r.nms_s);
  r.weights_version = out.weights_version;
  r.finish_s = t + r.inference_s + r.nms_s;
  last_finish_ = r.finish_s;
  return r;
}

void Runtime::finish() {
  if (finished_) return;
  finished_ = true;
  if (job_) {
    if (!job_->outcome) resolve();
    book(*job_->outcome, true);
    job_.reset();
  }
  requests_.close();
  if (dispatcher_.joinable()) dispatcher_.join();
  if (uplink_) uplink_->close();
  if (edge_thread_.joinable()) edge_thread_.join();
}

}  // namespace edgekt
