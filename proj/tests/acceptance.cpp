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

// Acceptance runner: one PASS/FAIL line per criterion, nonzero exit if any
// criterion fails. Usage: edgekt_acceptance --cli <path-to-edgekt>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "edgekt/detection.hpp"
#include "edgekt/error.hpp"
#include "edgekt/harness.hpp"
#include "edgekt/models.hpp"
#include "edgekt/netproto.hpp"
#include "edgekt/runtime.hpp"
#include "edgekt/selector.hpp"
#include "edgekt/tensor.hpp"

using namespace edgekt;

namespace {

// Collects failed checks of one criterion.
struct Check {
  std::vector<std::string> failures;
  void expect(bool ok, const std::string& what) {
    if (!ok) failures.push_back(what);
  }
};

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}

std::string cli_path;

int run_command(const std::string& cmd) {
  const int rc = std::system(cmd.c_str());
  return rc;
}

std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// ---- 1 ----------------------------------------------------------------

void criterion_probability_update(Check& c) {
  const double losses[] = {0.0, 0.4, 0.49, 0.51, 0.9, 2.0};
  for (int i = 1; i <= 20; ++i) {
    const double p = 0.05 * i;
    for (double dl : losses) {
      const double expected = dl > 0.5 ? std::min(2.0 * p, 1.0) : std::max(p - 0.05, 0.05);
      c.expect(next_probability(p, dl, 0.5) == expected,
               "next_probability(" + fmt(p) + ", " + fmt(dl) + ")");

      // Same values through the selector, which works on loss differences.
      KeyFrameSelector s;
      s.set_probability(p);
      s.update_probability(1.0);
      s.update_probability(1.0 + dl);
      c.expect(s.probability() == expected,
               "update_probability p=" + fmt(p) + " dL=" + fmt(dl) + " got " + fmt(s.probability()));
    }
  }
}

// ---- 2 ----------------------------------------------------------------

void criterion_selector_floor(Check& c) {
  SelectorConfig cfg;
  cfg.seed = 20240;
  cfg.tau_motion = 0.0;
  KeyFrameSelector s(cfg);
  const Tensor a = Tensor::filled({8, 8, 3}, 0.0f), b = Tensor::filled({8, 8, 3}, 1.0f);
  if (s.select(a)) s.complete(std::nullopt);
  s.set_probability(0.05);
  std::size_t motion_true = 0, selected = 0;
  for (int i = 0; i < 100000; ++i) {
    const Tensor& f = i % 2 ? a : b;
    const bool moving = s.motion_gate(f);
    if (!moving) continue;
    ++motion_true;
    if (s.sample_binomial_gate()) ++selected;
  }
  const double rate = double(selected) / double(motion_true);
  c.expect(motion_true == 100000, "motion gate closed on " + std::to_string(100000 - motion_true) + " frames");
  c.expect(std::fabs(rate - 0.0975) <= 0.003, "key-frame rate " + fmt(rate));
  std::cout << "    rate among motion-true frames: " << fmt(rate) << "\n";
}

// ---- 3 ----------------------------------------------------------------

void criterion_distillation_benefit(Check& c) {
  const SceneScript script = scene_preset("fixed_cam_default");
  c.expect(script.duration_frames == 600, "fixed_cam_default is not 600 frames");
  const RunReport shallow = run_scenario(scenario_preset("shallow"), script);
  const RunReport nt = run_scenario(scenario_preset("nt-lan"), script);
  const RunReport deep = run_scenario(scenario_preset("deep"), script);
  std::cout << "    F1 shallow " << fmt(shallow.metrics.f1) << ", nt-lan " << fmt(nt.metrics.f1)
            << ", deep " << fmt(deep.metrics.f1) << "\n";
  c.expect(nt.metrics.f1 - shallow.metrics.f1 >= 0.15, "NT(LAN) F1 gain below 0.15");
  c.expect(deep.metrics.f1 == 1.0, "deep F1 is not exactly 1");
}

// ---- 4 ----------------------------------------------------------------

std::map<std::string, std::map<std::string, double>> parse_comparison(const std::string& csv) {
  std::map<std::string, std::map<std::string, double>> rows;
  std::istringstream in(csv);
  std::string line;
  std::vector<std::string> header;
  auto split = [](const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string cell;
    while (std::getline(ss, cell, ',')) out.push_back(cell);
    return out;
  };
  if (std::getline(in, line)) header = split(line);
  while (std::getline(in, line)) {
    const auto cells = split(line);
    if (cells.size() != header.size()) continue;
    for (std::size_t i = 1; i < cells.size(); ++i) rows[cells[0]][header[i]] = std::stod(cells[i]);
  }
  return rows;
}

void criterion_table_orderings(Check& c) {
  const auto out = std::filesystem::current_path() / "acceptance_compare.csv";
  const std::string cmd = "\"" + cli_path + "\" compare --stream fixed_cam_default --seed 1 -q --out \"" +
                          out.string() + "\"";
  c.expect(run_command(cmd) == 0, "edgekt compare failed");
  auto rows = parse_comparison(read_file(out));
  for (const std::string& n : comparison_scenarios()) {
    if (!rows.contains(n)) {
      c.expect(false, "missing row " + n);
      return;
    }
  }
  auto e = [&](const char* n) { return rows[n]["energy_j_per_frame"]; };
  auto t = [&](const char* n) { return rows[n]["inference_time_s"]; };
  for (const std::string& n : comparison_scenarios()) {
    std::cout << "    " << n << ": J/frame " << fmt(rows[n]["energy_j_per_frame"]) << ", inference "
              << fmt(rows[n]["inference_time_s"]) << " s, F1 " << fmt(rows[n]["f1"]) << ", score "
              << fmt(rows[n]["overall_score"]) << "\n";
  }
  c.expect(e("deep") > e("lt"), "energy deep > lt");
  c.expect(e("lt") > e("nt-wifi"), "energy lt > nt-wifi");
  c.expect(e("nt-wifi") > e("shallow"), "energy nt-wifi > shallow");
  c.expect(e("shallow") >= e("nt-lan"), "energy shallow >= nt-lan");
  c.expect(t("deep") > t("lt"), "inference deep > lt");
  c.expect(t("lt") > t("nt-wifi"), "inference lt > nt-wifi");
  c.expect(t("nt-wifi") >= t("nt-lan"), "inference nt-wifi >= nt-lan");
  c.expect(t("nt-lan") > t("shallow"), "inference nt-lan > shallow");
  for (const std::string& n : comparison_scenarios()) {
    if (n != "nt-lan") {
      c.expect(rows["nt-lan"]["overall_score"] > rows[n]["overall_score"], "score nt-lan > " + n);
    }
  }
  std::filesystem::remove(out);
}

// ---- 5 ----------------------------------------------------------------

void criterion_half_precision(Check& c) {
  const SceneScript script = scene_preset("fixed_cam_default");
  const FrameEvent ev = render_frame(script, 0);
  FrameUpload full{ev.frame_id, Precision::full, ev.frame};
  FrameUpload half{ev.frame_id, Precision::half, f16_round(ev.frame)};
  const std::size_t bf = encode_message(full).size(), bh = encode_message(half).size();
  std::cout << "    FrameUpload bytes: full " << bf << ", half " << bh << "\n";
  c.expect(bf % 2 == 0 && bh == bf / 2 + 17, "half upload is not full/2 + 17 bytes");
  c.expect(encoded_size(half) == bh, "encoded_size disagrees with the encoder");

  ScenarioConfig nt_full = scenario_preset("nt-lan");
  ScenarioConfig nt_half = nt_full;
  nt_half.precision = Precision::half;
  const RunReport rf = run_scenario(nt_full, script);
  const RunReport rh = run_scenario(nt_half, script);
  const double tf = rf.transmit_s + rf.receive_s, th = rh.transmit_s + rh.receive_s;
  const double per_job_f = tf / double(rf.jobs_completed), per_job_h = th / double(rh.jobs_completed);
  std::cout << "    Tx+Rx per job: full " << fmt(per_job_f) << " s, half " << fmt(per_job_h)
            << " s; totals " << fmt(tf) << " / " << fmt(th) << " s\n";
  c.expect(rf.jobs_completed > 0 && rh.jobs_completed > 0, "no completed jobs");
  c.expect(th < 0.55 * tf, "half Tx+Rx not below 0.55 x full");
}

// ---- 6 ----------------------------------------------------------------

void criterion_no_queuing(Check& c) {
  SceneScript script = scene_preset("fixed_cam_default");
  const Stream stream = generate_stream(script);
  for (const char* name : {"lt", "nt-lan", "nt-wifi"}) {
    for (bool kfs : {true, false}) {
      ScenarioConfig cfg = scenario_preset(name);
      cfg.kfs_enabled = kfs;
      Runtime rt(cfg, pretrained_student(cfg.model),
                 [&stream](std::uint64_t id) { return stream.truth_at(id); });
      std::uint64_t last_version = 0;
      std::vector<std::uint64_t> seen;
      const std::string tag = std::string(name) + (kfs ? "" : " w/o KFS");
      for (const FrameEvent& ev : stream) {
        const StepResult r = rt.step(ev);
        c.expect(rt.jobs().max_in_flight <= 1, tag + ": more than one job in flight");
        if (r.swapped_to) c.expect(r.weights_version == *r.swapped_to, tag + ": swap not used");
        c.expect(r.weights_version >= last_version, tag + ": weight version went backwards");
        // Swaps only happen before inference, so the reported version is the
        // one still installed once the step returns.
        c.expect(r.weights_version == rt.student().version(), tag + ": inconsistent weight version");
        c.expect(r.swapped_to.has_value() == (r.weights_version != last_version) || last_version == 0,
                 tag + ": version changed without a swap");
        if (r.weights_version != last_version) seen.push_back(r.weights_version);
        last_version = r.weights_version;
      }
      rt.finish();
      const auto& installed = rt.jobs().weight_versions;
      // Every version an inference ran with was installed atomically by a swap.
      for (std::size_t i = 1; i < seen.size(); ++i) {
        c.expect(std::find(installed.begin(), installed.end(), seen[i]) != installed.end(),
                 tag + ": version " + std::to_string(seen[i]) + " never installed");
      }
      c.expect(rt.jobs().completed > 0, tag + ": no completed jobs");
    }
  }
}

// ---- 7 ----------------------------------------------------------------

Tensor random_tensor(const Shape& shape, std::mt19937_64& rng, float lo, float hi) {
  Tensor t(shape);
  std::uniform_real_distribution<float> u(lo, hi);
  for (float& x : t.data()) x = u(rng);
  return t;
}

std::vector<Box> reference_nms(std::vector<Box> boxes, double threshold) {
  std::vector<Box> kept;
  while (!boxes.empty()) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < boxes.size(); ++i) {
      if (boxes[i].score > boxes[best].score) best = i;
    }
    const Box b = boxes[best];
    kept.push_back(b);
    boxes.erase(boxes.begin() + static_cast<std::ptrdiff_t>(best));
    std::erase_if(boxes, [&](const Box& o) { return o.class_id == b.class_id && iou(o, b) > threshold; });
  }
  return kept;
}

void criterion_numerics(Check& c) {
  // Adam fixpoint.
  {
    std::mt19937_64 rng(11);
    Tensor p = random_tensor({4, 5}, rng, -10.0f, 10.0f);
    const Tensor original = p;
    AdamState st = AdamState::for_param(p);
    for (int i = 0; i < 25; ++i) p = adam_step(p, Tensor(p.shape()), st);
    c.expect(p == original, "Adam moved under a zero gradient");
  }
  // Distillation gradient against central differences on a miniature model.
  {
    std::mt19937_64 rng(4);
    ModelConfig mc;
    mc.input_size = 32;
    mc.classes = 2;
    mc.feature_channels = 8;
    mc.seed = 5;
    std::normal_distribution<float> n(0.0f, 1.0f);
    auto fill = [&](Tensor& t, float scale) {
      for (float& x : t.data()) x = scale * n(rng);
    };
    GeneralDecoder g;
    for (auto& h : g.heads) {
      h = Tensor({mc.head_inputs() + 1, mc.cell_channels()});
      fill(h, 0.1f);
    }
    const StudentModel m(mc, FeatureExtractor(mc), g);
    const FeatureMaps f = m.extractor().extract(random_tensor({32, 32, 3}, rng, 0.0f, 1.0f));
    DecoderWeights w;
    w.version = 1;
    for (const Shape& s : adaptive_block_shapes(mc)) {
      w.blocks.emplace_back(s);
      fill(w.blocks.back(), 0.05f);
    }
    DetectionTensorSet target;
    for (std::size_t i = 0; i < kNumScales; ++i) {
      const std::size_t grid = mc.grid_sizes()[i];
      target.scales[i] = Tensor({grid, grid, mc.cell_channels()});
      fill(target.scales[i], 1.0f);
    }
    const auto grads = distill_gradient(m, f, w, target);
    const float h = 0.25f;
    double worst = 0.0;
    for (std::size_t b = 0; b < w.blocks.size(); ++b) {
      double gmax = 0.0;
      for (float gv : grads[b].data()) gmax = std::max(gmax, std::fabs(double(gv)));
      for (std::size_t i = 0; i < w.blocks[b].size(); ++i) {
        DecoderWeights plus = w, minus = w;
        plus.blocks[b][i] += h;
        minus.blocks[b][i] -= h;
        const double fd =
            (distill_loss(m.forward(f, plus), target) - distill_loss(m.forward(f, minus), target)) / (2.0 * h);
        const double an = grads[b][i];
        worst = std::max(worst, std::fabs(fd - an) / std::max({std::fabs(an), std::fabs(fd), 1e-2 * gmax}));
      }
    }
    std::cout << "    gradient worst relative error " << fmt(worst) << "\n";
    c.expect(worst <= 1e-3, "gradient relative error " + fmt(worst));
  }
  // NMS against brute force.
  {
    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<float> pos(0.1f, 0.9f), side(0.05f, 0.4f), score(0.0f, 1.0f);
    std::uniform_int_distribution<int> cls(0, 1);
    std::size_t mismatches = 0;
    for (int instance = 0; instance < 500; ++instance) {
      std::vector<Box> boxes;
      for (int i = 0; i < 10; ++i) boxes.push_back(Box{pos(rng), pos(rng), side(rng), side(rng), cls(rng), score(rng)});
      if (nms(boxes, 0.45) != reference_nms(boxes, 0.45)) ++mismatches;
    }
    c.expect(mismatches == 0, std::to_string(mismatches) + " NMS mismatches");
  }
  // f16 round trip.
  {
    std::mt19937_64 rng(99);
    const Tensor t = random_tensor({100000}, rng, -1000.0f, 1000.0f);
    const Tensor back = f16_decode(f16_encode(t), t.shape());
    double worst = 0.0;
    for (std::size_t i = 0; i < t.size(); ++i) {
      if (std::fabs(t[i]) >= std::ldexp(1.0, -14)) {
        worst = std::max(worst, std::fabs(double(back[i]) - t[i]) / std::fabs(double(t[i])));
      }
    }
    c.expect(worst <= std::ldexp(1.0, -11), "f16 relative error " + fmt(worst));
  }
  // IoU and metrics spot checks.
  {
    const Box a{0.5f, 0.5f, 0.2f, 0.2f, 0, 1.0f}, b{0.6f, 0.5f, 0.2f, 0.2f, 0, 1.0f};
    c.expect(std::fabs(iou(a, b) - 1.0 / 3.0) < 1e-6, "IoU of half-shifted boxes");
    c.expect(iou(a, a) == 1.0, "IoU of a box with itself");
    const MetricsReport m = MetricsReport::from_counts(3, 2, 3);
    c.expect(m.precision == 0.6 && m.recall == 0.5, "precision/recall from counts");
    c.expect(std::fabs(m.f1 - 2.0 * 0.6 * 0.5 / 1.1) < 1e-12 && std::fabs(m.f1 - 0.5455) < 5e-5,
             "F1(0.6, 0.5)");
  }
}

// ---- 8 ----------------------------------------------------------------

void criterion_determinism(Check& c) {
  const auto dir = std::filesystem::current_path();
  const std::string base = "\"" + cli_path + "\" run --scenario nt-wifi --stream fixed_cam_default --seed 42 -q --format json --out ";
  const auto a = dir / "acceptance_run_a.json", b = dir / "acceptance_run_b.json";
  c.expect(run_command(base + "\"" + a.string() + "\"") == 0, "first run failed");
  c.expect(run_command(base + "\"" + b.string() + "\"") == 0, "second run failed");
  const std::string ja = read_file(a), jb = read_file(b);
  c.expect(!ja.empty(), "empty report");
  c.expect(ja == jb, "reports differ");
  std::cout << "    report size " << ja.size() << " bytes\n";
  std::filesystem::remove(a);
  std::filesystem::remove(b);
}

// ---- 9 ----------------------------------------------------------------

void criterion_location_independence(Check& c) {
  ScenarioConfig lt = scenario_preset("lt");
  lt.cost.edge_speedup = 1.0;
  lt.cost.contention_train = 0.0;
  lt.cost.contention_radio = 0.0;
  ScenarioConfig nt = lt;
  nt.mode = Mode::network_training;
  nt.channel = ChannelConfig::instant();

  const Stream stream = generate_stream(scene_preset("fixed_cam_default"));
  auto run = [&](const ScenarioConfig& cfg) {
    Runtime rt(cfg, pretrained_student(cfg.model), [&stream](std::uint64_t id) { return stream.truth_at(id); });
    std::vector<std::vector<Tensor>> sequence;
    std::uint64_t last = rt.student().version();
    for (const FrameEvent& ev : stream) {
      rt.step(ev);
      if (rt.student().version() != last) {
        last = rt.student().version();
        sequence.push_back(rt.student().adaptive()->blocks);
      }
    }
    rt.finish();
    if (rt.student().version() != last) sequence.push_back(rt.student().adaptive()->blocks);
    return std::make_pair(sequence, rt.jobs().weight_versions);
  };
  const auto [wl, vl] = run(lt);
  const auto [wn, vn] = run(nt);
  std::cout << "    " << wl.size() << " weight updates compared\n";
  c.expect(wl.size() > 1, "too few weight updates");
  c.expect(vl == vn, "weight version sequences differ");
  c.expect(wl == wn, "weight sequences differ");
}

// ---- 10 ---------------------------------------------------------------

void criterion_kfs(Check& c) {
  const SceneScript script = scene_preset("fixed_cam_default");
  ScenarioConfig with = scenario_preset("lt");
  ScenarioConfig without = with;
  without.kfs_enabled = false;
  const RunReport a = run_scenario(with, script);
  const RunReport b = run_scenario(without, script);
  const double share = double(a.key_frames.size()) / double(a.frames);
  std::cout << "    key frames " << a.key_frames.size() << "/" << a.frames << "; recall " << fmt(a.metrics.recall)
            << " vs " << fmt(b.metrics.recall) << "; J/frame " << fmt(a.joules_per_frame) << " vs "
            << fmt(b.joules_per_frame) << "\n";
  c.expect(share < 0.35, "KFS selected " + fmt(100 * share) + "% of frames");
  c.expect(a.metrics.recall >= b.metrics.recall - 0.05, "recall with KFS too low");
  c.expect(b.total_joules > a.total_joules, "LT w/o KFS not more expensive");
}

}  // namespace

int main(int argc, char** argv) {
  for (int i = 1; i + 1 < argc; ++i) {
    if (std::string(argv[i]) == "--cli") cli_path = argv[i + 1];
  }
  if (cli_path.empty()) {
    std::cerr << "usage: edgekt_acceptance --cli <path-to-edgekt>\n";
    return 2;
  }

  struct Criterion {
    int id;
    const char* name;
    double budget_s;
    std::function<void(Check&)> run;
  };
  const std::vector<Criterion> criteria = {
      {1, "probability update closed form", 1, criterion_probability_update},
      {2, "selector floor rate", 5, criterion_selector_floor},
      {3, "distillation benefit", 60, criterion_distillation_benefit},
      {4, "comparison orderings", 300, criterion_table_orderings},
      {5, "half-precision payload", 60, criterion_half_precision},
      {6, "no queuing, atomic weights", 60, criterion_no_queuing},
      {7, "numerical suites", 120, criterion_numerics},
      {8, "determinism", 120, criterion_determinism},
      {9, "location independence", 60, criterion_location_independence},
      {10, "key-frame selection efficiency", 300, criterion_kfs},
  };

  int failed = 0;
  for (const Criterion& cr : criteria) {
    Check check;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      cr.run(check);
    } catch (const std::exception& e) {
      check.expect(false, std::string("exception: ") + e.what());
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    check.expect(secs < cr.budget_s, "took " + fmt(secs) + " s, budget " + fmt(cr.budget_s) + " s");
    const bool ok = check.failures.empty();
    if (!ok) ++failed;
    std::printf("%s criterion %2d: %s (%.2f s)\n", ok ? "PASS" : "FAIL", cr.id, cr.name, secs);
    for (const std::string& f : check.failures) std::printf("    - %s\n", f.c_str());
    std::fflush(stdout);
  }
  std::printf("%d/%zu criteria passed\n", int(criteria.size()) - failed, criteria.size());
  return failed ? 1 : 0;
}
