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

// Discrete-time phase locks. The plant phase is
//
//   phi_k = setpoint + d_k - a_k
//
// with d the disturbance and a the actuator (PZT) position. The controller
// sees a sinusoidal discriminant e_k = G sin(phi_k - setpoint) + noise and
// steps the actuator by u_k = p e_k + i sum_{j<=k} e_j, clamped to
// +-actuator_range. The actuator integrates u, so the loop is type 2: a
// linear drift is removed completely once i > 0.

#include <array>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "tmsv/gaussian_state.hpp"
#include "tmsv/metrics.hpp"
#include "tmsv/random.hpp"

namespace tmsv {

struct LockLoop {
  std::string name = "lock";
  double setpoint_rad = 0.0;
  double error_gain = 1.0;
  double sensor_noise_rms = 0.01;
  // ~1 kHz unity-gain bandwidth at 100 kHz: p * G * rate / (2 pi).
  double p_gain = 0.0628;
  double i_gain = 4e-4;
  double actuator_range_rad = 30.0;
  double update_rate_hz = 100e3;

  void validate() const;
};

struct DisturbanceModel {
  double random_walk_coeff = 0.05;  // rad / sqrt(s)
  double linear_drift = 0.0;        // rad / s
  double initial_offset = 0.0;      // rad

  void validate() const;
};

double error_signal(double phi, const LockLoop& loop, double noise_sample);

/// One lock, advanced one update at a time. Deterministic for a seed.
class LockSimulator {
 public:
  LockSimulator(const LockLoop& loop, const DisturbanceModel& disturbance, std::uint64_t seed);

  /// Returns the residual phi_k - setpoint seen during this update.
  /// `sensor_offset_rad` is an extra error term in phase units, e.g. the
  /// residual of an upstream reference lock.
  double step(double sensor_offset_rad = 0.0);

  std::uint64_t steps() const { return steps_; }
  std::uint64_t saturation_events() const { return saturation_events_; }
  std::uint64_t saturated_steps() const { return saturated_steps_; }

 private:
  LockLoop loop_;
  DisturbanceModel disturbance_;
  Rng disturbance_rng_;
  Rng sensor_rng_;
  std::normal_distribution<double> normal_;
  double walk_step_;
  double drift_step_;
  double d_;
  double actuator_ = 0.0;
  double integral_ = 0.0;
  bool saturated_ = false;
  std::uint64_t steps_ = 0;
  std::uint64_t saturation_events_ = 0;
  std::uint64_t saturated_steps_ = 0;
};

struct LockResult {
  std::vector<double> residual;
  double update_rate = 0.0;
  /// Number of times the actuator hit its range (entries into saturation).
  std::uint64_t saturation_events = 0;
  std::uint64_t saturated_steps = 0;

  double rms() const;
  /// RMS over samples at t >= t_start, skipping the acquisition transient.
  double rms_after(double t_start) const;
};

LockResult run_lock(const LockLoop& loop, const DisturbanceModel& disturbance, double duration_s,
                    std::uint64_t seed, std::span<const double> sensor_offset_rad = {});

struct CascadeResult {
  LockResult reference;
  LockResult target;
};

/// Two-stage lock: the reference loop (auxiliary LO) runs first and its
/// residual enters the target loop's error signal.
CascadeResult run_cascade(const LockLoop& reference, const DisturbanceModel& reference_disturbance,
                          const LockLoop& target, const DisturbanceModel& target_disturbance,
                          double duration_s, std::uint64_t seed);

struct EntanglementDegradation {
  EntanglementCriteria base;
  EntanglementCriteria degraded;
  double duan_relative_increase() const { return degraded.duan / base.duan - 1.0; }
};

/// Criteria of the modeled state with Gaussian phase jitter of the given
/// rms on phi_ent (before the beam splitter) and on phi_A, phi_B.
EntanglementDegradation jitter_to_entanglement(const ExperimentSetup& setup,
                                               const PhaseJitter& residual_rms);

/// The four locks of the setup. phi_ent is referenced to the auxiliary LO
/// lock; phi_A and phi_B are independent.
struct LockSystem {
  LockLoop aux_lo{.name = "aux_lo"};
  LockLoop phi_ent{.name = "phi_ent"};
  LockLoop phi_a{.name = "phi_a"};
  LockLoop phi_b{.name = "phi_b"};
  DisturbanceModel disturbance;
  bool locked = true;  // false runs phi_ent open-loop (gains zeroed)
};

struct LoopSummary {
  std::string name;
  double rms_rad = 0.0;
  std::uint64_t saturation_events = 0;
};

struct StabilityTrace {
  double window_s = 0.0;
  std::vector<double> times;  // window centers
  std::vector<double> duan_values;
  std::vector<double> var_x_sum_db;
  std::vector<double> var_p_diff_db;
  std::vector<LoopSummary> loops;
  /// Expected standard deviation of a single dB point from sampling alone.
  double predicted_scatter_db = 0.0;

  std::size_t size() const { return times.size(); }
  void validate() const;
};

/// Co-simulates the locks and, per window, draws `window * sample_rate_hz`
/// independent quadrature samples from the state averaged over that
/// window's residual phases. Noise variances are in dB relative to the
/// two-vacuum level 2.
StabilityTrace stability_trace(const ExperimentSetup& setup, const LockSystem& locks,
                               double duration_s, double window_s, std::uint64_t seed,
                               double sample_rate_hz = 100e3);

/// "time_s,var_x_sum_db,var_p_diff_db,duan"
void write_stability_csv(std::ostream& out, const StabilityTrace& trace);

}  // namespace tmsv
