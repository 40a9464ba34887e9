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

#pragma once

// Experiment description files. Every dimensional key carries its unit in
// the name (cutoff_hz, phi_ent_rad, ...). Unknown keys are rejected so that
// a misspelt or unit-less key never silently falls back to a default.

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <yaml-cpp/yaml.h>

#include "tmsv/bootstrap.hpp"
#include "tmsv/control.hpp"
#include "tmsv/dsp.hpp"
#include "tmsv/error.hpp"
#include "tmsv/gaussian_state.hpp"
#include "tmsv/synth.hpp"

namespace tmsv::app {

/// Detector and RF chain shared by all runs of an acquisition.
struct AcquisitionConfig {
  double carrier_hz = 1e6;
  double sample_rate_hz = 16e6;
  double bandwidth_hz = 20e3;
  double dark_noise_db = -20.0;
  double vacuum_scale = 1.0;
  std::vector<SpurTone> spur_tones;
  /// Decimated samples per quadrature setting and per calibration run.
  std::uint64_t samples_per_setting = 100000;
  std::uint64_t calibration_samples = 100000;
};

/// Demodulator settings for one channel. The demod phase is not
/// configurable: it is set by the quadrature setting of each run.
struct ChannelDemodConfig {
  double lowpass_cutoff_hz = 50e3;
  int filter_taps = 2047;
  int decimation = 160;

  DemodConfig to_demod(double carrier_hz, Quadrature q) const;
};

struct AnalysisConfig {
  /// Which variances feed the headline numbers and the bootstrap; both
  /// modes are always reported side by side.
  bool subtract_dark = true;
};

struct LockSimConfig {
  LockSystem system;
  double duration_s = 10.0;
  double window_s = 0.1;
  double trace_sample_rate_hz = 100e3;
  double long_duration_s = 900.0;  // used with --long-tests
};

struct SweepConfig {
  std::string parameter;  // dotted path, e.g. budget.arm_a.0.efficiency
  std::vector<double> values;
};

struct ExperimentConfig {
  std::uint64_t seed = 1;
  ExperimentSetup setup;
  /// Residual lock jitter folded into the analytic model (rms, rad).
  PhaseJitter model_jitter;
  AcquisitionConfig acquisition;
  ChannelDemodConfig demod_a;
  ChannelDemodConfig demod_b;
  AnalysisConfig analysis;
  BootstrapConfig bootstrap;
  LockSimConfig locks;
  SweepConfig sweep;
  std::filesystem::path output_dir = "tmsv_out";

  /// Checks every component invariant; failures carry the field path.
  void validate() const;
  /// Paper-scale acquisition and bootstrap sizes.
  void apply_paper_scale();
};

/// Raised for malformed files and invalid values; the message starts with
/// the dotted field path.
class ConfigError : public Error {
 public:
  ConfigError(const std::string& path, const std::string& message);
};

ExperimentConfig parse_config(const YAML::Node& root);
ExperimentConfig load_config(const std::filesystem::path& path);
/// Full config (all fields, defaults filled in) as a YAML node.
YAML::Node to_yaml(const ExperimentConfig& config);
std::string emit_yaml(const YAML::Node& node);

/// Sets a numeric field addressed by a dotted path ("synth.dark_noise_db",
/// "budget.arm_a.0.efficiency"). Throws ConfigError when the path does not
/// resolve to an existing numeric field.
void set_numeric(YAML::Node& root, const std::string& path, double value);

}  // namespace tmsv::app
