// Copyright 2026 The tmsvlab Authors
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

#include "tmsv_app/config.hpp"

#include <cmath>
#include <numbers>
#include <set>
#include <sstream>

#include <fmt/format.h>

namespace tmsv::app {
namespace {

bool present(const YAML::Node& n) { return n.IsDefined() && !n.IsNull(); }

// Typed access to one YAML mapping with the dotted path kept for messages
// and a record of consumed keys to detect unknown ones.
class MapReader {
 public:
  MapReader(const YAML::Node& node, std::string path) : node_(node), path_(std::move(path)) {
    if (present(node_) && !node_.IsMap()) throw ConfigError(path_, "expected a mapping");
  }

  std::string child(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  YAML::Node get(const std::string& key) {
    seen_.insert(key);
    const YAML::Node& view = node_;  // const lookup never inserts
    return present(view) ? view[key] : YAML::Node();
  }

  template <typename T>
  void read(const std::string& key, T& out) {
    const YAML::Node n = get(key);
    if (!present(n)) return;
    try {
      out = n.as<T>();
    } catch (const YAML::Exception&) {
      throw ConfigError(child(key), fmt::format("cannot parse '{}'", YAML::Dump(n)));
    }
    if constexpr (std::is_floating_point_v<T>) {
      if (std::isnan(out)) throw ConfigError(child(key), "must be a number");
    }
  }

  void finish() const {
    if (!present(node_)) return;
    for (const auto& kv : node_) {
      const auto key = kv.first.as<std::string>();
      if (!seen_.count(key)) throw ConfigError(child(key), "unknown key");
    }
  }

 private:
  YAML::Node node_;
  std::string path_;
  std::set<std::string> seen_;
};

template <typename Fn>
void with_path(const std::string& path, Fn&& fn) {
  try {
    fn();
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    throw ConfigError(path, e.what());
  }
}

SqueezerSetting parse_source(const YAML::Node& n, const std::string& path) {
  MapReader r(n, path);
  SqueezerSetting s;
  r.read("vs", s.vs);
  r.read("va", s.va);
  r.read("angle_rad", s.angle);
  r.finish();
  return s;
}

std::vector<LossEntry> parse_arm(const YAML::Node& n, const std::string& path) {
  std::vector<LossEntry> arm;
  if (!present(n)) return arm;
  if (!n.IsSequence()) throw ConfigError(path, "expected a list of loss factors");
  for (std::size_t i = 0; i < n.size(); ++i) {
    MapReader r(n[i], fmt::format("{}.{}", path, i));
    LossEntry e;
    r.read("label", e.label);
    r.read("efficiency", e.efficiency);
    r.finish();
    arm.push_back(e);
  }
  return arm;
}

ChannelDemodConfig parse_demod(const YAML::Node& n, const std::string& path) {
  MapReader r(n, path);
  ChannelDemodConfig d;
  r.read("lowpass_cutoff_hz", d.lowpass_cutoff_hz);
  r.read("filter_taps", d.filter_taps);
  r.read("decimation", d.decimation);
  r.finish();
  return d;
}

LockLoop parse_loop(const YAML::Node& n, const std::string& path, LockLoop loop) {
  MapReader r(n, path);
  r.read("setpoint_rad", loop.setpoint_rad);
  r.read("error_gain", loop.error_gain);
  r.read("sensor_noise_rms", loop.sensor_noise_rms);
  r.read("p_gain", loop.p_gain);
  r.read("i_gain", loop.i_gain);
  r.read("actuator_range_rad", loop.actuator_range_rad);
  r.finish();
  return loop;
}

YAML::Node loop_yaml(const LockLoop& l) {
  YAML::Node n;
  n["setpoint_rad"] = l.setpoint_rad;
  n["error_gain"] = l.error_gain;
  n["sensor_noise_rms"] = l.sensor_noise_rms;
  n["p_gain"] = l.p_gain;
  n["i_gain"] = l.i_gain;
  n["actuator_range_rad"] = l.actuator_range_rad;
  return n;
}

}  // namespace

ConfigError::ConfigError(const std::string& path, const std::string& message)
    : Error(ErrorKind::kConfigError, path.empty() ? message : path + ": " + message) {}

DemodConfig ChannelDemodConfig::to_demod(double carrier_hz, Quadrature q) const {
  DemodConfig d;
  d.demod_freq_hz = carrier_hz;
  d.demod_phase_rad = q == Quadrature::kX ? 0.0 : std::numbers::pi / 2.0;
  d.lowpass_cutoff_hz = lowpass_cutoff_hz;
  d.filter_taps = filter_taps;
  d.decimation = decimation;
  return d;
}

ExperimentConfig parse_config(const YAML::Node& root) {
  ExperimentConfig c;
  MapReader top(root, "");
  top.read("seed", c.seed);
  std::string out_dir = c.output_dir.string();
  top.read("output_dir", out_dir);
  c.output_dir = out_dir;

  {
    MapReader r(top.get("sources"), "sources");
    c.setup.source_a = parse_source(r.get("a"), "sources.a");
    c.setup.source_b = parse_source(r.get("b"), "sources.b");
    r.finish();
  }
  top.read("phi_ent_rad", c.setup.phi_ent);
  {
    MapReader r(top.get("budget"), "budget");
    c.setup.budget.arm_a = parse_arm(r.get("arm_a"), "budget.arm_a");
    c.setup.budget.arm_b = parse_arm(r.get("arm_b"), "budget.arm_b");
    r.finish();
  }
  {
    MapReader r(top.get("model_jitter_rad"), "model_jitter_rad");
    r.read("phi_ent", c.model_jitter.phi_ent);
    r.read("phi_a", c.model_jitter.phi_a);
    r.read("phi_b", c.model_jitter.phi_b);
    r.finish();
  }
  {
    MapReader r(top.get("synth"), "synth");
    auto& a = c.acquisition;
    r.read("carrier_hz", a.carrier_hz);
    r.read("sample_rate_hz", a.sample_rate_hz);
    r.read("bandwidth_hz", a.bandwidth_hz);
    r.read("dark_noise_db", a.dark_noise_db);
    r.read("vacuum_scale", a.vacuum_scale);
    r.read("samples_per_setting", a.samples_per_setting);
    a.calibration_samples = a.samples_per_setting;
    r.read("calibration_samples", a.calibration_samples);
    const YAML::Node tones = r.get("spur_tones");
    if (present(tones)) {
      if (!tones.IsSequence()) throw ConfigError("synth.spur_tones", "expected a list");
      for (std::size_t i = 0; i < tones.size(); ++i) {
        MapReader t(tones[i], fmt::format("synth.spur_tones.{}", i));
        SpurTone tone;
        t.read("frequency_hz", tone.frequency_hz);
        t.read("amplitude", tone.amplitude);
        t.read("phase_rad", tone.phase_rad);
        t.finish();
        a.spur_tones.push_back(tone);
      }
    }
    r.finish();
  }
  {
    MapReader r(top.get("demod"), "demod");
    c.demod_a = parse_demod(r.get("a"), "demod.a");
    c.demod_b = parse_demod(r.get("b"), "demod.b");
    r.finish();
  }
  {
    MapReader r(top.get("analysis"), "analysis");
    r.read("subtract_dark", c.analysis.subtract_dark);
    r.finish();
  }
  {
    MapReader r(top.get("bootstrap"), "bootstrap");
    auto& b = c.bootstrap;
    r.read("n_chunks", b.n_chunks);
    r.read("chunk_len", b.chunk_len);
    std::string mode = b.resampling == Resampling::kIid ? "iid" : "block";
    r.read("resampling", mode);
    if (mode == "iid") {
      b.resampling = Resampling::kIid;
    } else if (mode == "block") {
      b.resampling = Resampling::kBlock;
    } else {
      throw ConfigError("bootstrap.resampling", fmt::format("expected iid or block, got '{}'", mode));
    }
    r.read("block_len", b.block_len);
    r.read("threads", b.n_threads);
    r.read("histogram_bins", b.histogram_bins);
    r.finish();
  }
  {
    MapReader r(top.get("locks"), "locks");
    auto& l = c.locks;
    double rate = l.system.phi_ent.update_rate_hz;
    r.read("update_rate_hz", rate);
    r.read("duration_s", l.duration_s);
    r.read("window_s", l.window_s);
    r.read("trace_sample_rate_hz", l.trace_sample_rate_hz);
    r.read("long_duration_s", l.long_duration_s);
    r.read("locked", l.system.locked);
    {
      MapReader d(r.get("disturbance"), "locks.disturbance");
      d.read("random_walk_rad_per_sqrt_s", l.system.disturbance.random_walk_coeff);
      d.read("linear_drift_rad_per_s", l.system.disturbance.linear_drift);
      d.read("initial_offset_rad", l.system.disturbance.initial_offset);
      d.finish();
    }
    {
      MapReader loops(r.get("loops"), "locks.loops");
      auto& s = l.system;
      s.aux_lo = parse_loop(loops.get("aux_lo"), "locks.loops.aux_lo", s.aux_lo);
      s.phi_ent = parse_loop(loops.get("phi_ent"), "locks.loops.phi_ent", s.phi_ent);
      s.phi_a = parse_loop(loops.get("phi_a"), "locks.loops.phi_a", s.phi_a);
      s.phi_b = parse_loop(loops.get("phi_b"), "locks.loops.phi_b", s.phi_b);
      loops.finish();
      for (LockLoop* loop : {&s.aux_lo, &s.phi_ent, &s.phi_a, &s.phi_b}) loop->update_rate_hz = rate;
    }
    r.finish();
  }
  {
    MapReader r(top.get("sweep"), "sweep");
    r.read("parameter", c.sweep.parameter);
    r.read("values", c.sweep.values);
    r.finish();
  }
  top.finish();
  c.validate();
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  YAML::Node root;
  try {
    root = YAML::LoadFile(path.string());
  } catch (const YAML::BadFile&) {
    throw ConfigError("", fmt::format("cannot read config file {}", path.string()));
  } catch (const YAML::Exception& e) {
    throw ConfigError("", fmt::format("{}: {}", path.string(), e.what()));
  }
  // A run manifest embeds the config it was produced from.
  if (root.IsMap() && root["manifest_version"] && root["config"]) return parse_config(root["config"]);
  return parse_config(root);
}

void ExperimentConfig::validate() const {
  with_path("sources.a", [&] { setup.source_a.validate(); });
  with_path("sources.b", [&] { setup.source_b.validate(); });
  if (!std::isfinite(setup.phi_ent)) throw ConfigError("phi_ent_rad", "must be finite");
  auto check_arm = [](const std::vector<LossEntry>& arm, const std::string& path) {
    for (std::size_t i = 0; i < arm.size(); ++i) {
      if (!(arm[i].efficiency > 0.0 && arm[i].efficiency <= 1.0)) {
        throw ConfigError(fmt::format("{}.{}.efficiency", path, i),
                          fmt::format("must lie in (0, 1], got {}", arm[i].efficiency));
      }
    }
  };
  check_arm(setup.budget.arm_a, "budget.arm_a");
  check_arm(setup.budget.arm_b, "budget.arm_b");
  for (auto [v, name] : {std::pair{model_jitter.phi_ent, "phi_ent"}, {model_jitter.phi_a, "phi_a"},
                         {model_jitter.phi_b, "phi_b"}}) {
    if (!(v >= 0.0) || !std::isfinite(v)) {
      throw ConfigError(std::string("model_jitter_rad.") + name, "must be a finite rms >= 0");
    }
  }
  const auto& a = acquisition;
  if (a.samples_per_setting < 2) throw ConfigError("synth.samples_per_setting", "must be >= 2");
  if (a.calibration_samples < 2) throw ConfigError("synth.calibration_samples", "must be >= 2");
  with_path("synth", [&] {
    SynthConfig s;
    s.carrier_hz = a.carrier_hz;
    s.sample_rate_hz = a.sample_rate_hz;
    s.bandwidth_hz = a.bandwidth_hz;
    s.dark_noise_db = a.dark_noise_db;
    s.vacuum_scale = a.vacuum_scale;
    s.spur_tones = a.spur_tones;
    s.validate();
  });
  with_path("demod.a", [&] { demod_a.to_demod(a.carrier_hz, Quadrature::kX).validate(a.sample_rate_hz); });
  with_path("demod.b", [&] { demod_b.to_demod(a.carrier_hz, Quadrature::kX).validate(a.sample_rate_hz); });
  if (demod_a.decimation != demod_b.decimation) {
    throw ConfigError("demod.b.decimation", "both channels must share one output rate");
  }
  if (demod_a.lowpass_cutoff_hz < a.bandwidth_hz) {
    throw ConfigError("demod.a.lowpass_cutoff_hz", "lowpass must pass the synthesized band");
  }
  if (demod_b.lowpass_cutoff_hz < a.bandwidth_hz) {
    throw ConfigError("demod.b.lowpass_cutoff_hz", "lowpass must pass the synthesized band");
  }
  with_path("bootstrap", [&] { bootstrap.validate(); });
  if (bootstrap.chunk_len > a.samples_per_setting) {
    throw ConfigError("bootstrap.chunk_len", "longer than synth.samples_per_setting");
  }
  const auto& s = locks.system;
  with_path("locks.loops.aux_lo", [&] { s.aux_lo.validate(); });
  with_path("locks.loops.phi_ent", [&] { s.phi_ent.validate(); });
  with_path("locks.loops.phi_a", [&] { s.phi_a.validate(); });
  with_path("locks.loops.phi_b", [&] { s.phi_b.validate(); });
  with_path("locks.disturbance", [&] { s.disturbance.validate(); });
  if (!(locks.window_s > 0.0) || !(locks.window_s < locks.duration_s)) {
    throw ConfigError("locks.window_s", "must be positive and shorter than locks.duration_s");
  }
  if (!(locks.trace_sample_rate_hz > 0.0)) {
    throw ConfigError("locks.trace_sample_rate_hz", "must be positive");
  }
  if (!(locks.long_duration_s > locks.window_s)) {
    throw ConfigError("locks.long_duration_s", "must exceed locks.window_s");
  }
}

void ExperimentConfig::apply_paper_scale() {
  acquisition.samples_per_setting = 1000000;
  acquisition.calibration_samples = 1000000;
  bootstrap.n_chunks = 10000;
  bootstrap.chunk_len = 200000;
}

YAML::Node to_yaml(const ExperimentConfig& c) {
  YAML::Node root;
  root["seed"] = c.seed;
  root["output_dir"] = c.output_dir.string();
  auto source = [](const SqueezerSetting& s) {
    YAML::Node n;
    n["vs"] = s.vs;
    n["va"] = s.va;
    n["angle_rad"] = s.angle;
    return n;
  };
  root["sources"]["a"] = source(c.setup.source_a);
  root["sources"]["b"] = source(c.setup.source_b);
  root["phi_ent_rad"] = c.setup.phi_ent;
  auto arm = [](const std::vector<LossEntry>& entries) {
    YAML::Node n(YAML::NodeType::Sequence);
    for (const auto& e : entries) {
      YAML::Node f;
      f["label"] = e.label;
      f["efficiency"] = e.efficiency;
      n.push_back(f);
    }
    return n;
  };
  root["budget"]["arm_a"] = arm(c.setup.budget.arm_a);
  root["budget"]["arm_b"] = arm(c.setup.budget.arm_b);
  root["model_jitter_rad"]["phi_ent"] = c.model_jitter.phi_ent;
  root["model_jitter_rad"]["phi_a"] = c.model_jitter.phi_a;
  root["model_jitter_rad"]["phi_b"] = c.model_jitter.phi_b;

  const auto& a = c.acquisition;
  YAML::Node synth;
  synth["carrier_hz"] = a.carrier_hz;
  synth["sample_rate_hz"] = a.sample_rate_hz;
  synth["bandwidth_hz"] = a.bandwidth_hz;
  synth["dark_noise_db"] = a.dark_noise_db;
  synth["vacuum_scale"] = a.vacuum_scale;
  synth["samples_per_setting"] = a.samples_per_setting;
  synth["calibration_samples"] = a.calibration_samples;
  YAML::Node tones(YAML::NodeType::Sequence);
  for (const auto& t : a.spur_tones) {
    YAML::Node n;
    n["frequency_hz"] = t.frequency_hz;
    n["amplitude"] = t.amplitude;
    n["phase_rad"] = t.phase_rad;
    tones.push_back(n);
  }
  synth["spur_tones"] = tones;
  root["synth"] = synth;

  auto demod = [](const ChannelDemodConfig& d) {
    YAML::Node n;
    n["lowpass_cutoff_hz"] = d.lowpass_cutoff_hz;
    n["filter_taps"] = d.filter_taps;
    n["decimation"] = d.decimation;
    return n;
  };
  root["demod"]["a"] = demod(c.demod_a);
  root["demod"]["b"] = demod(c.demod_b);
  root["analysis"]["subtract_dark"] = c.analysis.subtract_dark;

  YAML::Node b;
  b["n_chunks"] = c.bootstrap.n_chunks;
  b["chunk_len"] = c.bootstrap.chunk_len;
  b["resampling"] = c.bootstrap.resampling == Resampling::kIid ? "iid" : "block";
  b["block_len"] = c.bootstrap.block_len;
  b["threads"] = c.bootstrap.n_threads;
  b["histogram_bins"] = c.bootstrap.histogram_bins;
  root["bootstrap"] = b;

  YAML::Node l;
  const auto& s = c.locks.system;
  l["update_rate_hz"] = s.phi_ent.update_rate_hz;
  l["duration_s"] = c.locks.duration_s;
  l["window_s"] = c.locks.window_s;
  l["trace_sample_rate_hz"] = c.locks.trace_sample_rate_hz;
  l["long_duration_s"] = c.locks.long_duration_s;
  l["locked"] = s.locked;
  l["disturbance"]["random_walk_rad_per_sqrt_s"] = s.disturbance.random_walk_coeff;
  l["disturbance"]["linear_drift_rad_per_s"] = s.disturbance.linear_drift;
  l["disturbance"]["initial_offset_rad"] = s.disturbance.initial_offset;
  l["loops"]["aux_lo"] = loop_yaml(s.aux_lo);
  l["loops"]["phi_ent"] = loop_yaml(s.phi_ent);
  l["loops"]["phi_a"] = loop_yaml(s.phi_a);
  l["loops"]["phi_b"] = loop_yaml(s.phi_b);
  root["locks"] = l;

  root["sweep"]["parameter"] = c.sweep.parameter;
  YAML::Node values(YAML::NodeType::Sequence);
  for (double v : c.sweep.values) values.push_back(v);
  root["sweep"]["values"] = values;
  return root;
}

std::string emit_yaml(const YAML::Node& node) {
  YAML::Emitter out;
  out.SetDoublePrecision(17);
  out << node;
  return std::string(out.c_str()) + "\n";
}

void set_numeric(YAML::Node& root, const std::string& path, double value) {
  YAML::Node node;
  node.reset(root);
  std::stringstream ss(path);
  std::string part;
  std::string walked;
  while (std::getline(ss, part, '.')) {
    walked = walked.empty() ? part : walked + "." + part;
    YAML::Node next;
    if (node.IsSequence()) {
      std::size_t idx = 0;
      try {
        idx = std::stoul(part);
      } catch (const std::exception&) {
        throw ConfigError(walked, "expected a list index");
      }
      if (idx >= node.size()) throw ConfigError(walked, "list index out of range");
      next.reset(node[idx]);
    } else if (const YAML::Node& view = node; node.IsMap() && view[part]) {
      next.reset(view[part]);
    } else {
      throw ConfigError(walked, "no such field");
    }
    node.reset(next);
  }
  if (!node.IsScalar()) throw ConfigError(path, "not a numeric field");
  try {
    (void)node.as<double>();
  } catch (const YAML::Exception&) {
    throw ConfigError(path, "not a numeric field");
  }
  node = value;
}

}  // namespace tmsv::app
