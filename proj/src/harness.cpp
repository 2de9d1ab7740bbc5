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

#include "edgekt/harness.hpp"

#include <charconv>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <tuple>

#include "edgekt/error.hpp"
#include "json.hpp"

namespace edgekt {

using ojson = nlohmann::ordered_json;

namespace {

// ---------------------------------------------------------------------------
// Strict JSON reading

void check_keys(const ojson& obj, std::initializer_list<std::string_view> allowed,
                const std::string& section) {
  if (!obj.is_object()) throw Error(Errc::config, section + ": expected an object");
  for (const auto& [key, _] : obj.items()) {
    bool known = false;
    for (std::string_view a : allowed) known = known || key == a;
    if (!known) throw Error(Errc::config, section + ": unknown key '" + key + "'");
  }
}

template <typename T>
void read(const ojson& obj, const char* key, T& out) {
  if (obj.contains(key)) out = obj.at(key).get<T>();
}

void read_selector(const ojson& j, SelectorConfig& s) {
  check_keys(j, {"sigma", "tau_motion", "kalman", "p_init", "seed", "mapping"}, "selector");
  read(j, "sigma", s.sigma);
  read(j, "tau_motion", s.tau_motion);
  if (j.contains("kalman")) {
    const ojson& k = j.at("kalman");
    check_keys(k, {"q", "r"}, "selector.kalman");
    read(k, "q", s.kalman_q);
    read(k, "r", s.kalman_r);
  }
  read(j, "p_init", s.p_init);
  read(j, "seed", s.seed);
  if (j.contains("mapping")) s.mapping = binomial_mapping_from_string(j.at("mapping").get<std::string>());
}

void read_adapt(const ojson& j, AdaptConfig& a) {
  check_keys(j, {"steps", "lr", "beta1", "beta2", "eps"}, "adapt");
  read(j, "steps", a.steps);
  read(j, "lr", a.adam.lr);
  read(j, "beta1", a.adam.beta1);
  read(j, "beta2", a.adam.beta2);
  read(j, "eps", a.adam.eps);
}

void read_power(const ojson& j, PowerModel& p) {
  if (!j.is_object()) throw Error(Errc::config, "cost.power: expected an object");
  for (const auto& [key, value] : j.items()) {
    Activity a{};
    try {
      a = activity_from_string(key);
    } catch (const Error&) {
      throw Error(Errc::config, "cost.power: unknown activity '" + key + "'");
    }
    p[a] = value.get<double>();
  }
}

void read_cost(const ojson& j, CostModel& c) {
  check_keys(j,
             {"seconds_per_mac", "decode_ops_per_value", "train_step_fraction", "edge_speedup",
              "nms_base_s", "nms_per_candidate_s", "nms_per_pair_s", "contention_train",
              "contention_radio", "power"},
             "cost");
  read(j, "seconds_per_mac", c.seconds_per_mac);
  read(j, "decode_ops_per_value", c.decode_ops_per_value);
  read(j, "train_step_fraction", c.train_step_fraction);
  read(j, "edge_speedup", c.edge_speedup);
  read(j, "nms_base_s", c.nms_base_s);
  read(j, "nms_per_candidate_s", c.nms_per_candidate_s);
  read(j, "nms_per_pair_s", c.nms_per_pair_s);
  read(j, "contention_train", c.contention_train);
  read(j, "contention_radio", c.contention_radio);
  if (j.contains("power")) read_power(j.at("power"), c.power);
}

void read_channel(const ojson& j, ChannelConfig& c) {
  check_keys(j, {"bandwidth_bps", "base_latency_s", "jitter", "seed", "zero_cost", "outages"},
             "channel");
  read(j, "bandwidth_bps", c.bandwidth_bps);
  read(j, "base_latency_s", c.base_latency_s);
  if (j.contains("jitter")) {
    const ojson& jj = j.at("jitter");
    check_keys(jj, {"kind", "median_s", "sigma_log"}, "channel.jitter");
    if (jj.contains("kind")) {
      const std::string kind = jj.at("kind").get<std::string>();
      if (kind == "none") {
        c.jitter.kind = JitterSpec::Kind::none;
      } else if (kind == "lognormal") {
        c.jitter.kind = JitterSpec::Kind::lognormal;
      } else {
        throw Error(Errc::config, "channel.jitter.kind must be none or lognormal");
      }
    }
    read(jj, "median_s", c.jitter.median_s);
    read(jj, "sigma_log", c.jitter.sigma_log);
  }
  read(j, "seed", c.seed);
  read(j, "zero_cost", c.zero_cost);
  if (j.contains("outages")) {
    c.outages.clear();
    for (const ojson& w : j.at("outages")) {
      check_keys(w, {"start_s", "end_s"}, "channel.outages[]");
      c.outages.push_back({w.at("start_s").get<double>(), w.at("end_s").get<double>()});
    }
  }
}

void read_model(const ojson& j, ModelConfig& m) {
  check_keys(j, {"input_size", "classes", "feature_channels", "seed"}, "model");
  read(j, "input_size", m.input_size);
  read(j, "classes", m.classes);
  read(j, "feature_channels", m.feature_channels);
  read(j, "seed", m.seed);
}

void read_oracle(const ojson& j, OracleConfig& o) {
  check_keys(j, {"layer_count", "width_multiplier", "noise_amplitude", "objectness_logit"},
             "oracle");
  read(j, "layer_count", o.layer_count);
  read(j, "width_multiplier", o.width_multiplier);
  read(j, "noise_amplitude", o.noise_amplitude);
  read(j, "objectness_logit", o.objectness_logit);
}

ojson channel_json(const ChannelConfig& c) {
  ojson outages = ojson::array();
  for (const OutageWindow& w : c.outages) outages.push_back({{"start_s", w.start_s}, {"end_s", w.end_s}});
  return {{"bandwidth_bps", c.bandwidth_bps},
          {"base_latency_s", c.base_latency_s},
          {"jitter",
           {{"kind", c.jitter.kind == JitterSpec::Kind::lognormal ? "lognormal" : "none"},
            {"median_s", c.jitter.median_s},
            {"sigma_log", c.jitter.sigma_log}}},
          {"seed", c.seed},
          {"zero_cost", c.zero_cost},
          {"outages", outages}};
}

ojson scenario_json(const ScenarioConfig& c) {
  ojson power = ojson::object();
  for (std::size_t i = 0; i < kActivityCount; ++i) {
    power[activity_name(static_cast<Activity>(i))] = c.cost.power.watts[i];
  }
  return {
      {"name", c.name},
      {"mode", mode_name(c.mode)},
      {"precision", precision_name(c.precision)},
      {"kfs", c.kfs_enabled},
      {"selector",
       {{"sigma", c.selector.sigma},
        {"tau_motion", c.selector.tau_motion},
        {"kalman", {{"q", c.selector.kalman_q}, {"r", c.selector.kalman_r}}},
        {"p_init", c.selector.p_init},
        {"seed", c.selector.seed},
        {"mapping", binomial_mapping_name(c.selector.mapping)}}},
      {"adapt",
       {{"steps", c.adapt.steps},
        {"lr", c.adapt.adam.lr},
        {"beta1", c.adapt.adam.beta1},
        {"beta2", c.adapt.adam.beta2},
        {"eps", c.adapt.adam.eps}}},
      {"cost",
       {{"seconds_per_mac", c.cost.seconds_per_mac},
        {"decode_ops_per_value", c.cost.decode_ops_per_value},
        {"train_step_fraction", c.cost.train_step_fraction},
        {"edge_speedup", c.cost.edge_speedup},
        {"nms_base_s", c.cost.nms_base_s},
        {"nms_per_candidate_s", c.cost.nms_per_candidate_s},
        {"nms_per_pair_s", c.cost.nms_per_pair_s},
        {"contention_train", c.cost.contention_train},
        {"contention_radio", c.cost.contention_radio},
        {"power", power}}},
      {"channel", c.channel ? channel_json(*c.channel) : ojson(nullptr)},
      {"model",
       {{"input_size", c.model.input_size},
        {"classes", c.model.classes},
        {"feature_channels", c.model.feature_channels},
        {"seed", c.model.seed}}},
      {"oracle",
       {{"layer_count", c.oracle.layer_count},
        {"width_multiplier", c.oracle.width_multiplier},
        {"noise_amplitude", c.oracle.noise_amplitude},
        {"objectness_logit", c.oracle.objectness_logit}}},
  };
}

Precision precision_from_string(const std::string& s) {
  if (s == "full") return Precision::full;
  if (s == "half") return Precision::half;
  throw Error(Errc::config, "precision must be full or half");
}

// ---------------------------------------------------------------------------
// Report serialization

ojson metrics_json(const MetricsReport& m) {
  return {{"tp", m.true_positives}, {"fp", m.false_positives}, {"fn", m.false_negatives},
          {"precision", m.precision}, {"recall", m.recall},     {"f1", m.f1}};
}

MetricsReport metrics_from(const ojson& j) {
  MetricsReport m;
  m.true_positives = j.at("tp").get<std::size_t>();
  m.false_positives = j.at("fp").get<std::size_t>();
  m.false_negatives = j.at("fn").get<std::size_t>();
  m.precision = j.at("precision").get<double>();
  m.recall = j.at("recall").get<double>();
  m.f1 = j.at("f1").get<double>();
  return m;
}

std::string num(double v) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

template <typename F>
auto config_errors(F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::config, std::string("invalid JSON: ") + e.what());
  }
}

}  // namespace

// ---------------------------------------------------------------------------
// Scenarios

bool is_scenario_preset(std::string_view name) {
  return name == "shallow" || name == "deep" || name == "lt" || name == "nt-lan" ||
         name == "nt-wifi" || name == "hybrid";
}

ScenarioConfig scenario_preset(std::string_view name) {
  ScenarioConfig c;
  c.name = std::string(name);
  if (name == "shallow") {
    c.mode = Mode::no_training;
  } else if (name == "deep") {
    c.mode = Mode::oracle_only;
  } else if (name == "lt") {
    c.mode = Mode::local_training;
  } else if (name == "nt-lan") {
    c.mode = Mode::network_training;
    c.channel = ChannelConfig::lan();
  } else if (name == "nt-wifi") {
    c.mode = Mode::network_training;
    c.channel = ChannelConfig::wifi();
  } else if (name == "hybrid") {
    c.mode = Mode::hybrid;
    c.channel = ChannelConfig::wifi();
  } else {
    throw Error(Errc::config, "unknown scenario '" + std::string(name) + "'");
  }
  return c;
}

const std::vector<std::string>& comparison_scenarios() {
  static const std::vector<std::string> names = {"shallow", "deep", "lt", "nt-wifi", "nt-lan"};
  return names;
}

void apply_config_json(ScenarioConfig& c, std::string_view text) {
  config_errors([&] {
    const ojson j = ojson::parse(text);
    check_keys(j,
               {"name", "mode", "precision", "kfs", "selector", "adapt", "cost", "channel",
                "model", "oracle"},
               "config");
    read(j, "name", c.name);
    if (j.contains("mode")) c.mode = mode_from_string(j.at("mode").get<std::string>());
    if (j.contains("precision")) c.precision = precision_from_string(j.at("precision").get<std::string>());
    read(j, "kfs", c.kfs_enabled);
    if (j.contains("selector")) read_selector(j.at("selector"), c.selector);
    if (j.contains("adapt")) read_adapt(j.at("adapt"), c.adapt);
    if (j.contains("cost")) read_cost(j.at("cost"), c.cost);
    if (j.contains("channel")) {
      if (j.at("channel").is_null()) {
        c.channel.reset();
      } else {
        if (!c.channel) c.channel = ChannelConfig::lan();
        read_channel(j.at("channel"), *c.channel);
      }
    }
    if (j.contains("model")) read_model(j.at("model"), c.model);
    if (j.contains("oracle")) read_oracle(j.at("oracle"), c.oracle);
    return 0;
  });
}

std::string scenario_to_json(const ScenarioConfig& config) {
  return scenario_json(config).dump();
}

void set_seed(ScenarioConfig& config, std::uint64_t seed) {
  config.selector.seed = seed;
  if (config.channel) config.channel->seed = seed;
}

const StudentModel& pretrained_student(const ModelConfig& config) {
  using Key = std::tuple<std::size_t, std::size_t, std::size_t, std::uint64_t>;
  static std::mutex mutex;
  static std::map<Key, std::unique_ptr<StudentModel>> cache;
  const Key key{config.input_size, config.classes, config.feature_channels, config.seed};
  std::lock_guard lock(mutex);
  auto& slot = cache[key];
  if (!slot) slot = std::make_unique<StudentModel>(make_pretrained_student(config));
  return *slot;
}

// ---------------------------------------------------------------------------
// Running

RunReport run_scenario(const ScenarioConfig& config, const SceneScript& script) {
  config.validate();
  validate_script(script);
  if (script.height != config.model.input_size || script.classes != config.model.classes) {
    throw Error(Errc::config, "scene script size/classes do not match the model configuration");
  }
  const Stream stream = generate_stream(script);
  const StudentModel& student = pretrained_student(config.model);
  const OracleModel truth_oracle(config.model, config.oracle);

  RunReport rep;
  rep.scenario = config.name;
  rep.mode = mode_name(config.mode);
  rep.stream = script.name;
  rep.precision = precision_name(config.precision);
  rep.kfs = config.kfs_enabled;
  rep.frames = stream.size();
  rep.config = scenario_to_json(config);

  std::size_t tp = 0, fp = 0, fn = 0;
  double inference_total = 0.0;
  {
    Runtime rt(config, student, [&stream](std::uint64_t id) { return stream.truth_at(id); });
    for (const FrameEvent& ev : stream) {
      const StepResult s = rt.step(ev);
      const std::vector<Box> reference =
          nms(decode_boxes(truth_oracle.forward(ev.frame, ev.truth)));
      FrameRecord f;
      f.frame_id = s.frame_id;
      f.start_s = s.start_s;
      f.finish_s = s.finish_s;
      f.inference_s = s.inference_s;
      f.nms_s = s.nms_s;
      f.candidates = s.candidates;
      f.detections = s.detections.size();
      f.weights_version = s.weights_version;
      f.key_frame = s.key_frame;
      f.metrics = compute_metrics(s.detections, reference);
      tp += f.metrics.true_positives;
      fp += f.metrics.false_positives;
      fn += f.metrics.false_negatives;
      inference_total += s.inference_s;
      rep.trace.push_back(f);
    }
    rt.finish();

    const EnergyLedger& ledger = rt.ledger();
    const JobStats& jobs = rt.jobs();
    rep.total_joules = ledger.total_joules();
    for (std::size_t i = 0; i < kActivityCount; ++i) {
      rep.activity_joules[i] = ledger.joules(static_cast<Activity>(i));
      rep.activity_seconds[i] = ledger.seconds(static_cast<Activity>(i));
    }
    rep.jobs_dispatched = jobs.dispatched;
    rep.jobs_completed = jobs.completed;
    rep.jobs_failed = jobs.failed;
    rep.max_in_flight = jobs.max_in_flight;
    rep.transmit_s = jobs.transmit_s;
    rep.receive_s = jobs.receive_s;
    rep.upload_bytes = jobs.upload_bytes;
    rep.download_bytes = jobs.download_bytes;
    rep.key_frames = rt.key_frames();
    rep.weight_versions = jobs.weight_versions;
    rep.final_losses = jobs.final_losses;
    const std::size_t finished = jobs.completed + jobs.failed;
    rep.mean_training_s = finished ? jobs.total_training_s / static_cast<double>(finished) : 0.0;
  }
  rep.metrics = MetricsReport::from_counts(tp, fp, fn);
  const double n = static_cast<double>(rep.frames);
  rep.mean_inference_s = inference_total / n;
  rep.joules_per_frame = rep.total_joules / n;
  rep.overall_score = rep.metrics.f1 / rep.joules_per_frame;
  return rep;
}

std::vector<RunReport> compare_scenarios(const SceneScript& script,
                                         std::string_view overrides_json, std::uint64_t seed) {
  std::vector<ScenarioConfig> configs;
  for (const std::string& name : comparison_scenarios()) {
    const ScenarioConfig preset = scenario_preset(name);
    ScenarioConfig c = preset;
    if (!overrides_json.empty()) apply_config_json(c, overrides_json);
    c.name = preset.name;
    c.mode = preset.mode;
    set_seed(c, seed);
    c.validate();
    configs.push_back(std::move(c));
  }
  std::vector<RunReport> out;
  for (const ScenarioConfig& c : configs) out.push_back(run_scenario(c, script));
  return out;
}

// ---------------------------------------------------------------------------
// Reports

std::string report_to_json(const RunReport& r) {
  ojson energy = ojson::object();
  for (std::size_t i = 0; i < kActivityCount; ++i) {
    energy[activity_name(static_cast<Activity>(i))] = {{"joules", r.activity_joules[i]},
                                                        {"seconds", r.activity_seconds[i]}};
  }
  ojson trace = ojson::array();
  for (const FrameRecord& f : r.trace) {
    trace.push_back({{"frame", f.frame_id},
                     {"start_s", f.start_s},
                     {"finish_s", f.finish_s},
                     {"inference_s", f.inference_s},
                     {"nms_s", f.nms_s},
                     {"candidates", f.candidates},
                     {"detections", f.detections},
                     {"weights_version", f.weights_version},
                     {"key_frame", f.key_frame},
                     {"metrics", metrics_json(f.metrics)}});
  }
  const ojson j = {
      {"schema_version", r.schema_version},
      {"scenario", r.scenario},
      {"mode", r.mode},
      {"stream", r.stream},
      {"precision", r.precision},
      {"kfs", r.kfs},
      {"frames", r.frames},
      {"metrics", metrics_json(r.metrics)},
      {"mean_inference_s", r.mean_inference_s},
      {"mean_training_s", r.mean_training_s},
      {"total_joules", r.total_joules},
      {"joules_per_frame", r.joules_per_frame},
      {"overall_score", r.overall_score},
      {"energy", energy},
      {"jobs",
       {{"dispatched", r.jobs_dispatched},
        {"completed", r.jobs_completed},
        {"failed", r.jobs_failed},
        {"max_in_flight", r.max_in_flight}}},
      {"transfer",
       {{"transmit_s", r.transmit_s},
        {"receive_s", r.receive_s},
        {"upload_bytes", r.upload_bytes},
        {"download_bytes", r.download_bytes}}},
      {"key_frames", r.key_frames},
      {"weight_versions", r.weight_versions},
      {"final_losses", r.final_losses},
      {"trace", trace},
      {"config", r.config.empty() ? ojson::object() : ojson::parse(r.config)},
  };
  return j.dump(2) + "\n";
}

RunReport report_from_json(std::string_view text) {
  return config_errors([&] {
    const ojson j = ojson::parse(text);
    RunReport r;
    r.schema_version = j.at("schema_version").get<int>();
    if (r.schema_version != kReportSchemaVersion) {
      throw Error(Errc::config, "unsupported report schema_version " + std::to_string(r.schema_version));
    }
    r.scenario = j.at("scenario").get<std::string>();
    r.mode = j.at("mode").get<std::string>();
    r.stream = j.at("stream").get<std::string>();
    r.precision = j.at("precision").get<std::string>();
    r.kfs = j.at("kfs").get<bool>();
    r.frames = j.at("frames").get<std::size_t>();
    r.metrics = metrics_from(j.at("metrics"));
    r.mean_inference_s = j.at("mean_inference_s").get<double>();
    r.mean_training_s = j.at("mean_training_s").get<double>();
    r.total_joules = j.at("total_joules").get<double>();
    r.joules_per_frame = j.at("joules_per_frame").get<double>();
    r.overall_score = j.at("overall_score").get<double>();
    for (std::size_t i = 0; i < kActivityCount; ++i) {
      const ojson& e = j.at("energy").at(activity_name(static_cast<Activity>(i)));
      r.activity_joules[i] = e.at("joules").get<double>();
      r.activity_seconds[i] = e.at("seconds").get<double>();
    }
    const ojson& jobs = j.at("jobs");
    r.jobs_dispatched = jobs.at("dispatched").get<std::size_t>();
    r.jobs_completed = jobs.at("completed").get<std::size_t>();
    r.jobs_failed = jobs.at("failed").get<std::size_t>();
    r.max_in_flight = jobs.at("max_in_flight").get<std::size_t>();
    const ojson& tr = j.at("transfer");
    r.transmit_s = tr.at("transmit_s").get<double>();
    r.receive_s = tr.at("receive_s").get<double>();
    r.upload_bytes = tr.at("upload_bytes").get<std::size_t>();
    r.download_bytes = tr.at("download_bytes").get<std::size_t>();
    r.key_frames = j.at("key_frames").get<std::vector<std::uint64_t>>();
    r.weight_versions = j.at("weight_versions").get<std::vector<std::uint64_t>>();
    r.final_losses = j.at("final_losses").get<std::vector<double>>();
    for (const ojson& f : j.at("trace")) {
      FrameRecord rec;
      rec.frame_id = f.at("frame").get<std::uint64_t>();
      rec.start_s = f.at("start_s").get<double>();
      rec.finish_s = f.at("finish_s").get<double>();
      rec.inference_s = f.at("inference_s").get<double>();
      rec.nms_s = f.at("nms_s").get<double>();
      rec.candidates = f.at("candidates").get<std::size_t>();
      rec.detections = f.at("detections").get<std::size_t>();
      rec.weights_version = f.at("weights_version").get<std::uint64_t>();
      rec.key_frame = f.at("key_frame").get<bool>();
      rec.metrics = metrics_from(f.at("metrics"));
      r.trace.push_back(rec);
    }
    r.config = j.at("config").dump();
    return r;
  });
}

std::string report_to_csv(const RunReport& r) {
  std::string out =
      "frame,start_s,finish_s,inference_s,nms_s,candidates,detections,weights_version,"
      "key_frame,tp,fp,fn,precision,recall,f1\n";
  for (const FrameRecord& f : r.trace) {
    out += std::to_string(f.frame_id) + ',' + num(f.start_s) + ',' + num(f.finish_s) + ',' +
           num(f.inference_s) + ',' + num(f.nms_s) + ',' + std::to_string(f.candidates) + ',' +
           std::to_string(f.detections) + ',' + std::to_string(f.weights_version) + ',' +
           (f.key_frame ? "1" : "0") + ',' + std::to_string(f.metrics.true_positives) + ',' +
           std::to_string(f.metrics.false_positives) + ',' +
           std::to_string(f.metrics.false_negatives) + ',' + num(f.metrics.precision) + ',' +
           num(f.metrics.recall) + ',' + num(f.metrics.f1) + '\n';
  }
  return out;
}

std::string comparison_to_csv(const std::vector<RunReport>& reports) {
  std::string out =
      "scenario,energy_j_per_frame,inference_time_s,f1,overall_score,precision,recall,"
      "training_time_s,key_frames,total_joules\n";
  for (const RunReport& r : reports) {
    out += r.scenario + ',' + num(r.joules_per_frame) + ',' + num(r.mean_inference_s) + ',' +
           num(r.metrics.f1) + ',' + num(r.overall_score) + ',' + num(r.metrics.precision) + ',' +
           num(r.metrics.recall) + ',' + num(r.mean_training_s) + ',' +
           std::to_string(r.key_frames.size()) + ',' + num(r.total_joules) + '\n';
  }
  return out;
}

void write_text(const std::filesystem::path& path, std::string_view text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(Errc::io, "cannot open '" + path.string() + "' for writing");
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  out.close();
  if (!out) throw Error(Errc::io, "failed writing '" + path.string() + "'");
}

void emit_report(const RunReport& report, ReportFormat format, const std::filesystem::path& path) {
  write_text(path, format == ReportFormat::json ? report_to_json(report) : report_to_csv(report));
}

}  // namespace edgekt
