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

#include <cmath>
#include <vector>

#include "doctest.h"
#include "edgekt/error.hpp"
#include "edgekt/harness.hpp"
#include "edgekt/runtime.hpp"

using namespace edgekt;

namespace {

const Stream& short_stream() {
  static const Stream stream = [] {
    SceneScript s = scene_preset("fixed_cam_default");
    s.duration_frames = 150;
    s.shift_schedule.clear();
    return generate_stream(s);
  }();
  return stream;
}

TruthProvider truth_of(const Stream& st) {
  return [&st](std::uint64_t id) { return st.truth_at(id); };
}

struct Run {
  std::vector<StepResult> steps;
  JobStats jobs;
  std::vector<std::uint64_t> keys;
  double joules = 0.0;
  double oracle_s = 0.0, train_s = 0.0;
  std::uint64_t final_version = 0;
  std::vector<Tensor> final_blocks;
  std::vector<Tensor> edge_blocks;
  std::uint64_t edge_version = 0;
};

Run run(const ScenarioConfig& cfg, const Stream& st = short_stream()) {
  Runtime rt(cfg, pretrained_student(cfg.model), truth_of(st));
  Run out;
  for (const auto& ev : st) out.steps.push_back(rt.step(ev));
  rt.finish();
  out.jobs = rt.jobs();
  out.keys = rt.key_frames();
  out.joules = rt.ledger().total_joules();
  out.oracle_s = rt.ledger().seconds(Activity::oracle_local);
  out.train_s = rt.ledger().seconds(Activity::train_local);
  out.final_version = rt.student().version();
  out.final_blocks = rt.student().adaptive()->blocks;
  if (rt.edge()) {
    out.edge_blocks = rt.edge()->clone().adaptive()->blocks;
    out.edge_version = rt.edge()->clone().version();
  }
  return out;
}

double local_job_seconds(const ScenarioConfig& cfg) {
  const StudentModel& s = pretrained_student(cfg.model);
  const OracleModel o(cfg.model, cfg.oracle);
  const double oracle = cfg.cost.compute_seconds(o.forward_macs(s.forward_macs()));
  const double step = cfg.cost.train_step_fraction * cfg.cost.compute_seconds(s.forward_macs());
  return oracle + static_cast<double>(cfg.adapt.steps) * step;
}

}  // namespace

TEST_CASE("no training dispatches nothing") {
  const Run r = run(scenario_preset("shallow"));
  CHECK(r.jobs.dispatched == 0);
  CHECK(r.keys.empty());
  CHECK(r.final_version == 1);
  for (const auto& s : r.steps) CHECK(s.weights_version == 1);
}

TEST_CASE("local training") {
  const ScenarioConfig cfg = scenario_preset("lt");
  const Run r = run(cfg);
  REQUIRE(r.jobs.completed > 1);
  CHECK(r.jobs.failed == 0);
  CHECK(r.jobs.max_in_flight == 1);
  for (std::size_t i = 0; i < r.jobs.weight_versions.size(); ++i) {
    CHECK(r.jobs.weight_versions[i] == i + 2);
  }
  CHECK(r.final_version == r.jobs.weight_versions.back());

  // Each job books the oracle pass plus its Adam steps.
  const double job = local_job_seconds(cfg);
  CHECK(r.oracle_s + r.train_s == doctest::Approx(job * r.jobs.completed));

  // Every frame is served, with versions that never go back.
  REQUIRE(r.steps.size() == short_stream().size());
  for (std::size_t i = 1; i < r.steps.size(); ++i) {
    CHECK(r.steps[i].frame_id == i);
    CHECK(r.steps[i].weights_version >= r.steps[i - 1].weights_version);
    CHECK(r.steps[i].start_s >= r.steps[i - 1].finish_s);
    if (r.steps[i].swapped_to) CHECK(r.steps[i].weights_version == *r.steps[i].swapped_to);
  }
}

TEST_CASE("without KFS every idle frame becomes a key frame") {
  ScenarioConfig cfg = scenario_preset("lt");
  cfg.kfs_enabled = false;
  Runtime rt(cfg, pretrained_student(cfg.model), truth_of(short_stream()));
  std::size_t keys = 0;
  for (const auto& ev : short_stream()) {
    const StepResult s = rt.step(ev);
    keys += s.key_frame;
    // Either this frame was selected, or a job was already running.
    CHECK(rt.selector().busy());
    CHECK(rt.jobs().dispatched - rt.jobs().completed - rt.jobs().failed <= 1);
  }
  rt.finish();
  CHECK(keys == rt.jobs().dispatched);
  CHECK(keys > 10);
}

TEST_CASE("runs are deterministic") {
  for (const char* name : {"lt", "nt-wifi"}) {
    CAPTURE(name);
    const Run a = run(scenario_preset(name));
    const Run b = run(scenario_preset(name));
    REQUIRE(a.steps.size() == b.steps.size());
    for (std::size_t i = 0; i < a.steps.size(); ++i) {
      CHECK(a.steps[i].detections == b.steps[i].detections);
      CHECK(a.steps[i].finish_s == b.steps[i].finish_s);
    }
    CHECK(a.keys == b.keys);
    CHECK(a.joules == b.joules);
  }
}

TEST_CASE("network training keeps the edge clone in step") {
  const Run r = run(scenario_preset("nt-lan"));
  REQUIRE(r.jobs.completed > 1);
  CHECK(r.jobs.max_in_flight == 1);
  CHECK(r.edge_version == r.final_version);
  CHECK(r.edge_blocks == r.final_blocks);
  CHECK(r.oracle_s == 0.0);
  CHECK(r.train_s == 0.0);
  CHECK(r.jobs.transmit_s > 0.0);
  CHECK(r.jobs.receive_s > 0.0);
}

TEST_CASE("a LAN round trip beats local training") {
  const ScenarioConfig lt = scenario_preset("lt");
  const Run nt = run(scenario_preset("nt-lan"));
  const double nt_job = nt.jobs.total_training_s / static_cast<double>(nt.jobs.completed);
  CHECK(nt_job < local_job_seconds(lt));
}

TEST_CASE("half precision halves both transfer legs") {
  ScenarioConfig full = scenario_preset("nt-lan");
  ScenarioConfig half = full;
  half.precision = Precision::half;
  const Run f = run(full), h = run(half);
  REQUIRE(f.jobs.completed > 0);
  REQUIRE(h.jobs.completed > 0);
  const double up_f = f.jobs.transmit_s / double(f.jobs.upload_bytes);
  const double up_h = h.jobs.transmit_s / double(h.jobs.upload_bytes);
  CHECK(up_f == doctest::Approx(up_h));  // same rate per byte
  const double per_job_f = double(f.jobs.upload_bytes) / f.jobs.dispatched;
  const double per_job_h = double(h.jobs.upload_bytes) / h.jobs.dispatched;
  CHECK(per_job_h / per_job_f == doctest::Approx(0.5).epsilon(0.01));
  const double down_f = double(f.jobs.download_bytes) / f.jobs.completed;
  const double down_h = double(h.jobs.download_bytes) / h.jobs.completed;
  CHECK(down_h / down_f == doctest::Approx(0.5).epsilon(0.02));
}

TEST_CASE("zero-cost network training matches local training") {
  ScenarioConfig lt = scenario_preset("lt");
  lt.cost.edge_speedup = 1.0;
  lt.cost.contention_train = 0.0;
  lt.cost.contention_radio = 0.0;
  ScenarioConfig nt = lt;
  nt.mode = Mode::network_training;
  nt.channel = ChannelConfig::instant();
  const Run a = run(lt), b = run(nt);
  REQUIRE(a.jobs.completed > 1);
  CHECK(a.keys == b.keys);
  CHECK(a.jobs.weight_versions == b.jobs.weight_versions);
  CHECK(a.jobs.final_losses == b.jobs.final_losses);
  CHECK(a.final_blocks == b.final_blocks);
}

TEST_CASE("channel outage aborts jobs and frees the selector") {
  ScenarioConfig cfg = scenario_preset("nt-lan");
  cfg.channel->outages = {{0.0, 1e9}};
  const Run r = run(cfg);
  CHECK(r.jobs.dispatched > 1);
  CHECK(r.jobs.completed == 0);
  CHECK(r.jobs.failed == r.jobs.dispatched);
  CHECK(r.final_version == 1);
}

TEST_CASE("edge_serve") {
  const ModelConfig mc;
  const Stream& st = short_stream();
  const StudentModel& base = pretrained_student(mc);
  const AdaptConfig adapt;

  SUBCASE("upload returns the clone's new decoder") {
    EdgeNode edge(base, OracleModel(mc), truth_of(st), adapt);
    const Message reply = edge.edge_serve(FrameUpload{5, Precision::full, st[5].frame});
    const auto& wu = std::get<WeightUpdate>(reply);
    CHECK(wu.frame_id == 5);
    CHECK(wu.weights == *edge.clone().adaptive());
    CHECK(wu.weights.version == 2);
  }
  SUBCASE("FIFO replies") {
    EdgeNode edge(base, OracleModel(mc), truth_of(st), adapt);
    const auto a = edge.edge_serve(FrameUpload{3, Precision::full, st[3].frame});
    const auto b = edge.edge_serve(FrameUpload{4, Precision::full, st[4].frame});
    CHECK(message_frame_id(a) == 3);
    CHECK(message_frame_id(b) == 4);
    CHECK(std::get<WeightUpdate>(b).weights.version == 3);
  }
  SUBCASE("half precision trains on the rounded frame") {
    EdgeNode edge(base, OracleModel(mc), truth_of(st), adapt);
    const auto bytes = encode_message(FrameUpload{7, Precision::half, st[7].frame});
    const Message reply = edge.edge_serve(bytes);
    const auto& wu = std::get<WeightUpdate>(reply);
    const Tensor rounded = f16_round(st[7].frame);
    const auto expected = adapt_decoder(base, rounded, OracleModel(mc).forward(rounded, st.truth_at(7)),
                                        adapt.steps, adapt.adam);
    CHECK(wu.weights == to_half_precision(expected.weights));
    CHECK(wu.final_loss == expected.final_loss);
  }
  SUBCASE("malformed input is answered with an error ack") {
    EdgeNode edge(base, OracleModel(mc), truth_of(st), adapt);
    const std::vector<std::uint8_t> junk = {1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
    CHECK(std::get<Ack>(edge.edge_serve(junk)).status == AckStatus::error);
    const auto bad = edge.edge_serve(FrameUpload{1, Precision::full, Tensor({8, 8, 3})});
    CHECK(std::get<Ack>(bad).status == AckStatus::error);
    CHECK(std::get<Ack>(edge.edge_serve(Ack{2, AckStatus::ok})).status == AckStatus::error);
    CHECK(edge.clone().version() == 1);
  }
}

TEST_CASE("config validation") {
  ScenarioConfig c = scenario_preset("nt-lan");
  c.channel.reset();
  CHECK_THROWS_AS(c.validate(), Error);
  c = scenario_preset("lt");
  c.adapt.steps = 0;
  CHECK_THROWS_AS(c.validate(), Error);
  CHECK(mode_from_string(mode_name(Mode::hybrid)) == Mode::hybrid);
  CHECK_THROWS_AS(mode_from_string("psychic"), Error);
}
