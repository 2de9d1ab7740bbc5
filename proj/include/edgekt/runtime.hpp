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

#include <atomic>
#include <condition_variable>
#include <cstddef>
#include <cstdint>
#include <deque>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "edgekt/detection.hpp"
#include "edgekt/energy.hpp"
#include "edgekt/models.hpp"
#include "edgekt/netproto.hpp"
#include "edgekt/scenegen.hpp"
#include "edgekt/selector.hpp"

namespace edgekt {

enum class Mode {
  no_training,       // shallow student only
  local_training,    // oracle and trainer on the user-end device
  network_training,  // oracle and trainer on the edge node
  hybrid,            // experimental: per-job choice between the two above
  oracle_only,       // deep model on the user-end device for every frame
};

const char* mode_name(Mode m) noexcept;
Mode mode_from_string(std::string_view name);

struct ScenarioConfig {
  std::string name = "custom";
  Mode mode = Mode::no_training;
  std::optional<ChannelConfig> channel;
  Precision precision = Precision::full;
  bool kfs_enabled = true;
  SelectorConfig selector;
  AdaptConfig adapt;
  CostModel cost;
  ModelConfig model;
  OracleConfig oracle;

  /// Throws Errc::config.
  void validate() const;
  bool trains() const noexcept {
    return mode == Mode::local_training || mode == Mode::network_training || mode == Mode::hybrid;
  }
};

/// Unbounded FIFO between two threads. pop() blocks until an item arrives
/// or the queue is closed and drained.
template <typename T>
class BlockingQueue {
 public:
  void push(T item) {
    {
      std::lock_guard lock(mutex_);
      items_.push_back(std::move(item));
    }
    ready_.notify_one();
  }

  std::optional<T> pop() {
    std::unique_lock lock(mutex_);
    ready_.wait(lock, [this] { return closed_ || !items_.empty(); });
    if (items_.empty()) return std::nullopt;
    T item = std::move(items_.front());
    items_.pop_front();
    return item;
  }

  void close() {
    {
      std::lock_guard lock(mutex_);
      closed_ = true;
    }
    ready_.notify_all();
  }

 private:
  std::mutex mutex_;
  std::condition_variable ready_;
  std::deque<T> items_;
  bool closed_ = false;
};

using TruthProvider = std::function<std::vector<Box>(std::uint64_t frame_id)>;

/// Edge node: the oracle plus a clone of the student. Uploads are answered
/// with the adapted decoder, weight updates re-synchronise the clone.
class EdgeNode {
 public:
  EdgeNode(StudentModel clone, OracleModel oracle, TruthProvider truth, AdaptConfig adapt);

  /// FrameUpload -> WeightUpdate for the same frame id (clone updated in
  /// place); WeightUpdate -> Ack after installing it into the clone. Any
  /// failure is answered with Ack{error}.
  Message edge_serve(const Message& m);
  /// Decodes first; undecodable bytes give Ack{frame 0, error}.
  Message edge_serve(std::span<const std::uint8_t> bytes);

  const StudentModel& clone() const noexcept { return clone_; }

  /// Serves the uplink until it closes, replying on the downlink after the
  /// edge compute time charged by `cost`.
  void serve(SimChannel& uplink, SimChannel& downlink, const CostModel& cost);

 private:
  StudentModel clone_;
  OracleModel oracle_;
  TruthProvider truth_;
  AdaptConfig adapt_;
};

struct TrainRequest {
  std::uint64_t job_id = 0;
  std::uint64_t frame_id = 0;
  Tensor frame;
  double dispatch_time = 0.0;
  bool remote = false;
  bool resync = false;  // send the user's decoder to the edge clone first
};

struct TrainOutcome {
  std::uint64_t job_id = 0;
  std::uint64_t frame_id = 0;
  bool remote = false;
  bool ok = false;
  std::string error;
  std::optional<DecoderWeights> weights;
  double initial_loss = 0.0;
  double final_loss = 0.0;
  double dispatch_time = 0.0;
  double completion_time = 0.0;
  double oracle_s = 0.0;  // local only
  double train_s = 0.0;   // local only
  std::vector<Delivery> uploads;
  std::vector<Delivery> downloads;
};

/// Virtual-time interval of background work on the user-end device.
struct BusyInterval {
  double start = 0.0;
  double end = 0.0;
  bool radio = false;  // radio transfer rather than local compute
};

struct StepResult {
  std::uint64_t frame_id = 0;
  double start_s = 0.0;
  double finish_s = 0.0;
  double decode_s = 0.0;
  double inference_s = 0.0;
  double nms_s = 0.0;
  double idle_s = 0.0;
  std::size_t candidates = 0;
  std::vector<Box> detections;
  std::uint64_t weights_version = 0;
  bool key_frame = false;
  std::optional<std::uint64_t> swapped_to;  // version installed before inference
};

struct JobStats {
  std::size_t dispatched = 0;
  std::size_t completed = 0;
  std::size_t failed = 0;
  std::size_t stale_swaps = 0;
  std::size_t max_in_flight = 0;
  double total_training_s = 0.0;  // sum of dispatch-to-completion times
  double transmit_s = 0.0;
  double receive_s = 0.0;
  std::size_t upload_bytes = 0;
  std::size_t download_bytes = 0;
  std::vector<std::uint64_t> weight_versions;  // installed, in order
  std::vector<double> final_losses;            // successful jobs, in order
};

/// User-end node plus, for network modes, an edge node thread. Inference
/// and selection run on the caller's thread one frame at a time; training
/// jobs go to a dispatcher thread through a queue and come back the same
/// way. Durations are virtual, so a run is reproducible on any machine.
class Runtime {
 public:
  Runtime(ScenarioConfig config, const StudentModel& pretrained, TruthProvider truth);
  ~Runtime();

  Runtime(const Runtime&) = delete;
  Runtime& operator=(const Runtime&) = delete;

  /// Frames must be passed in stream order.
  StepResult step(const FrameEvent& event);

  /// Waits for an in-flight job and books its cost. Called by the
  /// destructor if needed.
  void finish();

  const ScenarioConfig& config() const noexcept { return config_; }
  const EnergyLedger& ledger() const noexcept { return ledger_; }
  const JobStats& jobs() const noexcept { return jobs_; }
  const StudentModel& student() const noexcept { return student_; }
  const EdgeNode* edge() const noexcept { return edge_.get(); }
  const KeyFrameSelector& selector() const noexcept { return selector_; }
  const std::vector<std::uint64_t>& key_frames() const noexcept { return key_frames_; }

 private:
  struct InFlight {
    TrainRequest request;
    double known_until = 0.0;  // no unknown background activity before this
    std::vector<BusyInterval> known_intervals;
    std::optional<TrainOutcome> outcome;
  };

  void dispatcher_loop();
  TrainOutcome run_local(const TrainRequest& r);
  TrainOutcome run_remote(const TrainRequest& r);
  void resolve();
  void book(const TrainOutcome& o, bool apply);
  void settle(double now, StepResult& result);
  void dispatch(const FrameEvent& event, double now);
  bool choose_remote() const;
  double local_job_seconds() const;
  double edge_job_seconds() const;
  std::vector<BusyInterval> intervals_of(const TrainOutcome& o) const;

  ScenarioConfig config_;
  StudentModel student_;
  OracleModel oracle_;
  TruthProvider truth_;
  KeyFrameSelector selector_;
  EnergyLedger ledger_;

  std::unique_ptr<SimChannel> uplink_;
  std::unique_ptr<SimChannel> downlink_;
  std::unique_ptr<EdgeNode> edge_;
  std::thread edge_thread_;

  BlockingQueue<TrainRequest> requests_;
  BlockingQueue<TrainOutcome> outcomes_;
  std::thread dispatcher_;
  std::atomic<std::size_t> in_flight_{0};
  std::atomic<std::size_t> max_in_flight_{0};
  std::uint64_t edge_version_ = 1;  // decoder version held by the edge clone

  std::optional<InFlight> job_;
  std::uint64_t next_job_id_ = 1;
  double last_finish_ = 0.0;
  JobStats jobs_;
  std::vector<std::uint64_t> key_frames_;
  bool finished_ = false;
};

}  // namespace edgekt
