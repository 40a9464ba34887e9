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

// Virtual experiment: four quadrature-setting runs plus vacuum and dark
// calibration runs, demodulated, normalized and reduced to criteria.

#include <filesystem>
#include <string>
#include <vector>

#include "tmsv/bootstrap.hpp"
#include "tmsv/dsp.hpp"
#include "tmsv/metrics.hpp"
#include "tmsv_app/config.hpp"

namespace tmsv::app {

enum class RunKind { kSignal, kVacuum, kDark };

struct RunPlan {
  std::string name;
  RunKind kind = RunKind::kSignal;
  Quadrature setting_a = Quadrature::kX;
  Quadrature setting_b = Quadrature::kX;
  SynthConfig synth;
  DemodConfig demod_a;
  DemodConfig demod_b;
  std::uint64_t n_outputs = 0;  // decimated samples kept per channel
};

/// Covariance of the modeled state at the detectors (budget and model
/// jitter included).
Eigen::Matrix4d model_covariance(const ExperimentConfig& config);

/// Expected vacuum-normalized covariance after the analysis chain: with
/// dark subtraction this is the optical state itself; without it the dark
/// floor d stays in the variances and the normalization becomes 1 + d.
Eigen::Matrix4d expected_measured_covariance(const Eigen::Matrix4d& model, double dark_noise_db,
                                             bool subtract_dark);

/// Runs in fixed order XX, XP, PX, PP, vacuum, dark; run i uses seed
/// derive_seed(config.seed, i).
std::vector<RunPlan> plan_runs(const ExperimentConfig& config);

struct DemodulatedRun {
  RunPlan plan;
  QuadratureSamples a;
  QuadratureSamples b;
};

struct Dataset {
  std::vector<DemodulatedRun> runs;
  const DemodulatedRun& run(RunKind kind, Quadrature a = Quadrature::kX,
                            Quadrature b = Quadrature::kX) const;
};

/// Synthesizes and demodulates one run on the fly.
DemodulatedRun acquire_run(const RunPlan& plan);
/// Demodulates a recorded raw stream of the given plan.
DemodulatedRun demodulate_run(const RunPlan& plan, const RawSampleStream& stream);
Dataset acquire(const ExperimentConfig& config);

struct ModeAnalysis {
  bool subtract_dark = false;
  CovarianceReconstruction reconstruction;
  EntanglementCriteria criteria;
  std::vector<QuadratureSettingRecord> records;
};

struct BootstrapSummary {
  Statistic statistic;
  BootstrapResult result;
};

struct AnalysisResult {
  ChannelCalibration cal_a;
  ChannelCalibration cal_b;
  ModeAnalysis without_dark_subtraction;
  ModeAnalysis with_dark_subtraction;
  bool primary_subtracts_dark = true;
  std::vector<BootstrapSummary> bootstrap;

  const ModeAnalysis& primary() const {
    return primary_subtracts_dark ? with_dark_subtraction : without_dark_subtraction;
  }
  const BootstrapResult& bootstrap_of(Statistic s) const;
};

/// Statistics resampled by analyze(), in report order.
inline constexpr Statistic kReportedStatistics[] = {Statistic::kDuan, Statistic::kEprReidAB,
                                                    Statistic::kEprReidBA,
                                                    Statistic::kVarianceXSum,
                                                    Statistic::kVariancePDiff};

/// `run_bootstrap = false` stops after the reconstruction.
AnalysisResult analyze(const Dataset& dataset, const ExperimentConfig& config,
                       bool run_bootstrap = true);

/// Criterion below its bound by more than three bootstrap sigmas.
bool significantly_below(const BootstrapResult& r, double critical);

}  // namespace tmsv::app
