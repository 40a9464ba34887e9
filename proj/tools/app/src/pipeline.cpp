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

#include "tmsv_app/pipeline.hpp"

#include <cmath>

#include <fmt/format.h>

#include "tmsv/random.hpp"

namespace tmsv::app {

Eigen::Matrix4d model_covariance(const ExperimentConfig& config) {
  return build_experiment(config.setup, config.model_jitter).cov();
}

Eigen::Matrix4d expected_measured_covariance(const Eigen::Matrix4d& model, double dark_noise_db,
                                             bool subtract_dark) {
  if (subtract_dark || !std::isfinite(dark_noise_db)) return model;
  const double d = std::pow(10.0, dark_noise_db / 10.0);
  return (model + d * Eigen::Matrix4d::Identity()) / (1.0 + d);
}

std::vector<RunPlan> plan_runs(const ExperimentConfig& config) {
  const auto& acq = config.acquisition;
  SynthConfig base;
  base.carrier_hz = acq.carrier_hz;
  base.sample_rate_hz = acq.sample_rate_hz;
  base.bandwidth_hz = acq.bandwidth_hz;
  base.dark_noise_db = acq.dark_noise_db;
  base.vacuum_scale = acq.vacuum_scale;
  base.spur_tones = acq.spur_tones;
  base.tone_warning_band_hz = std::max(config.demod_a.lowpass_cutoff_hz, config.demod_b.lowpass_cutoff_hz);
  const Eigen::Matrix4d gamma = model_covariance(config);

  struct Spec {
    const char* name;
    RunKind kind;
    Quadrature a, b;
  };
  const Spec specs[] = {
      {"XX", RunKind::kSignal, Quadrature::kX, Quadrature::kX},
      {"XP", RunKind::kSignal, Quadrature::kX, Quadrature::kP},
      {"PX", RunKind::kSignal, Quadrature::kP, Quadrature::kX},
      {"PP", RunKind::kSignal, Quadrature::kP, Quadrature::kP},
      {"vacuum", RunKind::kVacuum, Quadrature::kX, Quadrature::kX},
      {"dark", RunKind::kDark, Quadrature::kX, Quadrature::kX},
  };
  std::vector<RunPlan> plans;
  for (std::size_t i = 0; i < std::size(specs); ++i) {
    const Spec& s = specs[i];
    RunPlan p;
    p.name = s.name;
    p.kind = s.kind;
    p.setting_a = s.a;
    p.setting_b = s.b;
    p.synth = base;
    p.synth.seed = derive_seed(config.seed, i);
    p.synth.target_cov = s.kind == RunKind::kSignal ? gamma : Eigen::Matrix4d::Identity();
    p.synth.optical_signal = s.kind != RunKind::kDark;
    p.demod_a = config.demod_a.to_demod(acq.carrier_hz, s.a);
    p.demod_b = config.demod_b.to_demod(acq.carrier_hz, s.b);
    p.n_outputs = s.kind == RunKind::kSignal ? acq.samples_per_setting : acq.calibration_samples;
    const auto support = static_cast<std::uint64_t>(
        std::max(config.demod_a.filter_taps, config.demod_b.filter_taps));
    p.synth.n_samples = (p.n_outputs - 1) * static_cast<std::uint64_t>(config.demod_a.decimation) + support;
    plans.push_back(std::move(p));
  }
  return plans;
}

const DemodulatedRun& Dataset::run(RunKind kind, Quadrature a, Quadrature b) const {
  for (const auto& r : runs) {
    if (r.plan.kind != kind) continue;
    if (kind != RunKind::kSignal || (r.plan.setting_a == a && r.plan.setting_b == b)) return r;
  }
  if (kind == RunKind::kSignal) {
    throw Error(ErrorKind::kIncompleteTomography,
                fmt::format("dataset lacks the ({},{}) run", to_char(a), to_char(b)));
  }
  throw Error(ErrorKind::kCalibrationFailure,
              fmt::format("dataset lacks the {} calibration run",
                          kind == RunKind::kVacuum ? "vacuum" : "dark"));
}

namespace {

void trim(DemodulatedRun& run) {
  if (run.a.values.size() > run.plan.n_outputs) run.a.values.resize(run.plan.n_outputs);
  if (run.b.values.size() > run.plan.n_outputs) run.b.values.resize(run.plan.n_outputs);
}

}  // namespace

DemodulatedRun acquire_run(const RunPlan& plan) {
  DemodulatedRun run;
  run.plan = plan;
  auto q = demodulate_synthesized(plan.synth, plan.demod_a, plan.demod_b);
  run.a = std::move(q[0]);
  run.b = std::move(q[1]);
  trim(run);
  return run;
}

DemodulatedRun demodulate_run(const RunPlan& plan, const RawSampleStream& stream) {
  DemodulatedRun run;
  run.plan = plan;
  run.a = iq_demodulate(stream, 0, plan.demod_a);
  run.b = iq_demodulate(stream, 1, plan.demod_b);
  trim(run);
  return run;
}

Dataset acquire(const ExperimentConfig& config) {
  Dataset d;
  for (const auto& plan : plan_runs(config)) d.runs.push_back(acquire_run(plan));
  return d;
}

const BootstrapResult& AnalysisResult::bootstrap_of(Statistic s) const {
  for (const auto& b : bootstrap)
    if (b.statistic == s) return b.result;
  throw Error(ErrorKind::kInvalidArgument,
              fmt::format("statistic {} was not bootstrapped", to_string(s)));
}

AnalysisResult analyze(const Dataset& dataset, const ExperimentConfig& config, bool run_bootstrap) {
  AnalysisResult out;
  const DemodulatedRun& vac = dataset.run(RunKind::kVacuum);
  const DemodulatedRun& dark = dataset.run(RunKind::kDark);
  out.cal_a = ChannelCalibration::from_runs(vac.a, dark.a);
  out.cal_b = ChannelCalibration::from_runs(vac.b, dark.b);
  out.primary_subtracts_dark = config.analysis.subtract_dark;

  for (bool subtract : {false, true}) {
    ModeAnalysis& mode = subtract ? out.with_dark_subtraction : out.without_dark_subtraction;
    mode.subtract_dark = subtract;
    for (Quadrature qa : {Quadrature::kX, Quadrature::kP}) {
      for (Quadrature qb : {Quadrature::kX, Quadrature::kP}) {
        const DemodulatedRun& r = dataset.run(RunKind::kSignal, qa, qb);
        mode.records.push_back(normalized_record(r.a, r.b, qa, qb, out.cal_a, out.cal_b, subtract));
      }
    }
    mode.reconstruction = reconstruct_covariance_with_errors(mode.records);
    mode.criteria = criteria_from_records(mode.records);
  }
  if (run_bootstrap) {
    const auto results =
        bootstrap_statistics(out.primary().records, config.bootstrap, kReportedStatistics);
    for (std::size_t i = 0; i < results.size(); ++i) {
      out.bootstrap.push_back({kReportedStatistics[i], results[i]});
    }
  }
  return out;
}

bool significantly_below(const BootstrapResult& r, double critical) {
  return r.fit_mean + 3.0 * r.fit_sigma < critical;
}

}  // namespace tmsv::app
