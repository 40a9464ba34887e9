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

#include "tmsv/control.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include <fmt/format.h>

#include "tmsv/error.hpp"

namespace tmsv {

void LockLoop::validate() const {
  auto fail = [&](std::string_view what) {
    throw Error(ErrorKind::kInvalidArgument, fmt::format("lock '{}': {}", name, what));
  };
  if (!(error_gain > 0.0)) fail("error_gain must be positive");
  if (!(update_rate_hz > 0.0)) fail("update_rate must be positive");
  if (!(actuator_range_rad > 0.0)) fail("actuator_range must be positive");
  if (!(sensor_noise_rms >= 0.0)) fail("sensor_noise_rms must be non-negative");
  if (!std::isfinite(p_gain) || !std::isfinite(i_gain) || !std::isfinite(setpoint_rad)) {
    fail("gains and setpoint must be finite");
  }
}

void DisturbanceModel::validate() const {
  if (!(random_walk_coeff >= 0.0)) {
    throw Error(ErrorKind::kInvalidArgument, "random_walk_coeff must be non-negative");
  }
  if (!std::isfinite(linear_drift) || !std::isfinite(initial_offset)) {
    throw Error(ErrorKind::kInvalidArgument, "disturbance parameters must be finite");
  }
}

double error_signal(double phi, const LockLoop& loop, double noise_sample) {
  return loop.error_gain * (std::sin(phi - loop.setpoint_rad) + loop.sensor_noise_rms * noise_sample);
}

LockSimulator::LockSimulator(const LockLoop& loop, const DisturbanceModel& disturbance,
                             std::uint64_t seed)
    : loop_(loop),
      disturbance_(disturbance),
      disturbance_rng_(derive_seed(seed, 0)),
      sensor_rng_(derive_seed(seed, 1)),
      walk_step_(disturbance.random_walk_coeff / std::sqrt(loop.update_rate_hz)),
      drift_step_(disturbance.linear_drift / loop.update_rate_hz),
      d_(disturbance.initial_offset) {
  loop_.validate();
  disturbance_.validate();
}

double LockSimulator::step(double sensor_offset_rad) {
  if (steps_ > 0) d_ += drift_step_ + walk_step_ * normal_(disturbance_rng_);
  const double residual = d_ - actuator_;
  const double noise = loop_.sensor_noise_rms > 0.0 ? normal_(sensor_rng_) : 0.0;
  const double e = error_signal(loop_.setpoint_rad + residual, loop_, noise) +
                   loop_.error_gain * sensor_offset_rad;
  integral_ += e;
  const double next = actuator_ + loop_.p_gain * e + loop_.i_gain * integral_;
  const double range = loop_.actuator_range_rad;
  const bool saturated = std::abs(next) > range;
  actuator_ = std::clamp(next, -range, range);
  if (saturated) {
    ++saturated_steps_;
    if (!saturated_) ++saturation_events_;
  }
  saturated_ = saturated;
  ++steps_;
  return residual;
}

double LockResult::rms() const { return rms_after(0.0); }

double LockResult::rms_after(double t_start) const {
  const auto first = static_cast<std::size_t>(std::max(0.0, std::ceil(t_start * update_rate)));
  if (first >= residual.size()) return 0.0;
  double acc = 0.0;
  for (std::size_t i = first; i < residual.size(); ++i) acc += residual[i] * residual[i];
  return std::sqrt(acc / static_cast<double>(residual.size() - first));
}

namespace {

std::size_t step_count(double duration_s, double rate) {
  if (!(duration_s > 0.0) || !std::isfinite(duration_s)) {
    throw Error(ErrorKind::kInvalidArgument, "duration must be positive");
  }
  return static_cast<std::size_t>(std::llround(duration_s * rate));
}

}  // namespace

LockResult run_lock(const LockLoop& loop, const DisturbanceModel& disturbance, double duration_s,
                    std::uint64_t seed, std::span<const double> sensor_offset_rad) {
  LockSimulator sim(loop, disturbance, seed);
  const std::size_t n = step_count(duration_s, loop.update_rate_hz);
  if (!sensor_offset_rad.empty() && sensor_offset_rad.size() < n) {
    throw Error(ErrorKind::kInvalidArgument, "sensor offset trace shorter than the run");
  }
  LockResult result;
  result.update_rate = loop.update_rate_hz;
  result.residual.resize(n);
  for (std::size_t k = 0; k < n; ++k) {
    result.residual[k] = sim.step(sensor_offset_rad.empty() ? 0.0 : sensor_offset_rad[k]);
  }
  result.saturation_events = sim.saturation_events();
  result.saturated_steps = sim.saturated_steps();
  return result;
}

CascadeResult run_cascade(const LockLoop& reference, const DisturbanceModel& reference_disturbance,
                          const LockLoop& target, const DisturbanceModel& target_disturbance,
                          double duration_s, std::uint64_t seed) {
  if (reference.update_rate_hz != target.update_rate_hz) {
    throw Error(ErrorKind::kInvalidArgument, "cascaded loops must share one update rate");
  }
  CascadeResult out;
  out.reference = run_lock(reference, reference_disturbance, duration_s, derive_seed(seed, 0));
  out.target = run_lock(target, target_disturbance, duration_s, derive_seed(seed, 1),
                        out.reference.residual);
  return out;
}

EntanglementDegradation jitter_to_entanglement(const ExperimentSetup& setup,
                                               const PhaseJitter& residual_rms) {
  EntanglementDegradation out;
  out.base = evaluate_criteria(build_experiment(setup).cov());
  out.degraded = evaluate_criteria(build_experiment(setup, residual_rms).cov());
  return out;
}

void StabilityTrace::validate() const {
  if (!(window_s > 0.0)) throw Error(ErrorKind::kInvalidArgument, "window length must be positive");
  const std::size_t n = times.size();
  if (duan_values.size() != n || var_x_sum_db.size() != n || var_p_diff_db.size() != n) {
    throw Error(ErrorKind::kInvalidArgument, "stability trace columns have unequal lengths");
  }
}

namespace {

struct MomentAccumulator {
  double c1 = 0.0, s1 = 0.0, c2 = 0.0, s2 = 0.0;
  double sq = 0.0;
  std::size_t n = 0;
  double total_sq = 0.0;
  std::size_t total_n = 0;

  void add(double phi) {
    c1 += std::cos(phi);
    s1 += std::sin(phi);
    c2 += std::cos(2.0 * phi);
    s2 += std::sin(2.0 * phi);
    total_sq += phi * phi;
    ++n;
    ++total_n;
  }
  PhaseMoments take() {
    const double inv = 1.0 / static_cast<double>(n);
    PhaseMoments m{c1 * inv, s1 * inv, c2 * inv, s2 * inv};
    *this = MomentAccumulator{.total_sq = total_sq, .total_n = total_n};
    return m;
  }
  double rms() const { return total_n ? std::sqrt(total_sq / static_cast<double>(total_n)) : 0.0; }
};

}  // namespace

StabilityTrace stability_trace(const ExperimentSetup& setup, const LockSystem& locks,
                               double duration_s, double window_s, std::uint64_t seed,
                               double sample_rate_hz) {
  if (!(window_s > 0.0) || !(window_s < duration_s)) {
    throw Error(ErrorKind::kInvalidArgument,
                fmt::format("window {} s must be positive and shorter than the run {} s", window_s,
                            duration_s));
  }
  if (!(sample_rate_hz > 0.0)) throw Error(ErrorKind::kInvalidArgument, "sample rate must be positive");
  const double rate = locks.phi_ent.update_rate_hz;
  for (const LockLoop* l : {&locks.aux_lo, &locks.phi_a, &locks.phi_b}) {
    if (l->update_rate_hz != rate) {
      throw Error(ErrorKind::kInvalidArgument, "all locks must share one update rate");
    }
  }
  LockLoop ent_loop = locks.phi_ent;
  if (!locks.locked) ent_loop.p_gain = ent_loop.i_gain = 0.0;

  LockSimulator aux(locks.aux_lo, locks.disturbance, derive_seed(seed, 0));
  LockSimulator ent(ent_loop, locks.disturbance, derive_seed(seed, 1));
  LockSimulator lock_a(locks.phi_a, locks.disturbance, derive_seed(seed, 2));
  LockSimulator lock_b(locks.phi_b, locks.disturbance, derive_seed(seed, 3));
  Rng sampler(derive_seed(seed, 4));

  const auto steps_per_window = static_cast<std::size_t>(std::llround(window_s * rate));
  const auto n_windows = static_cast<std::size_t>(std::floor(duration_s / window_s + 1e-9));
  const auto samples = static_cast<double>(std::max<long long>(2, std::llround(window_s * sample_rate_hz)));
  std::chi_squared_distribution<double> chi2(samples - 1.0);

  StabilityTrace trace;
  trace.window_s = window_s;
  trace.predicted_scatter_db = 10.0 / std::log(10.0) * std::sqrt(2.0 / (samples - 1.0));
  MomentAccumulator m_aux, m_ent, m_a, m_b;
  for (std::size_t w = 0; w < n_windows; ++w) {
    for (std::size_t k = 0; k < steps_per_window; ++k) {
      const double r_aux = aux.step();
      m_aux.add(r_aux);
      m_ent.add(ent.step(r_aux));
      m_a.add(lock_a.step());
      m_b.add(lock_b.step());
    }
    m_aux.take();
    const GaussianState state = build_experiment(setup, m_ent.take(), m_a.take(), m_b.take());
    const Eigen::Matrix4d cov = state.cov();
    const double vx = variance_x_sum(cov) * chi2(sampler) / (samples - 1.0);
    const double vp = variance_p_diff(cov) * chi2(sampler) / (samples - 1.0);
    trace.times.push_back((static_cast<double>(w) + 0.5) * window_s);
    trace.var_x_sum_db.push_back(to_db(vx, 2.0));
    trace.var_p_diff_db.push_back(to_db(vp, 2.0));
    trace.duan_values.push_back(vx + vp);
  }
  auto summary = [](const LockLoop& loop, const LockSimulator& sim, const MomentAccumulator& m) {
    return LoopSummary{loop.name, m.rms(), sim.saturation_events()};
  };
  trace.loops = {summary(locks.aux_lo, aux, m_aux), summary(ent_loop, ent, m_ent),
                 summary(locks.phi_a, lock_a, m_a), summary(locks.phi_b, lock_b, m_b)};
  return trace;
}

void write_stability_csv(std::ostream& out, const StabilityTrace& trace) {
  trace.validate();
  out << "time_s,var_x_sum_db,var_p_diff_db,duan\n";
  for (std::size_t i = 0; i < trace.size(); ++i) {
    out << fmt::format("{:.6f},{:.6f},{:.6f},{:.6f}\n", trace.times[i], trace.var_x_sum_db[i],
                       trace.var_p_diff_db[i], trace.duan_values[i]);
  }
  if (!out) throw Error(ErrorKind::kIoError, "CSV write failed");
}

}  // namespace tmsv
