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

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "tmsv/control.hpp"
#include "tmsv_app/config.hpp"
#include "tmsv_app/pipeline.hpp"

namespace tmsv::app {

struct ModelReport {
  Eigen::Matrix4d gamma;
  EntanglementCriteria criteria;
  /// What the analysis chain should report for this config, per mode.
  EntanglementCriteria expected_without_dark_subtraction;
  EntanglementCriteria expected_with_dark_subtraction;
  double total_efficiency_a = 1.0;
  double total_efficiency_b = 1.0;
};

ModelReport cmd_model(const ExperimentConfig& config, std::ostream& out);

struct SimulateResult {
  std::filesystem::path manifest;
  std::vector<std::filesystem::path> files;
};

/// Writes run_<name>.tmsv for the six runs plus manifest.yaml into out_dir.
SimulateResult cmd_simulate(const ExperimentConfig& config, const std::filesystem::path& out_dir,
                            std::ostream& out);

/// Loads the dataset described by <dataset_dir>/manifest.yaml. When
/// `config_override` is set it replaces the embedded config for demodulation
/// and analysis settings.
AnalysisResult cmd_analyze(const std::filesystem::path& dataset_dir,
                           const ExperimentConfig* config_override,
                           const std::filesystem::path& out_dir, std::ostream& out);

/// Reads a recorded dataset without analyzing it.
Dataset load_dataset(const std::filesystem::path& dataset_dir, const ExperimentConfig& config,
                     bool verify_hashes = true);

struct LocksimResult {
  StabilityTrace trace;
  double max_deviation_db = 0.0;
  bool flat = false;
  EntanglementDegradation degradation;
};

inline constexpr double kFlatTraceToleranceDb = 0.3;

LocksimResult cmd_locksim(const ExperimentConfig& config, bool long_tests,
                          const std::filesystem::path& out_dir, std::ostream& out);

struct SweepRow {
  double value = 0.0;
  EntanglementCriteria criteria;
};

/// Re-evaluates the model for each value of a numeric config field.
std::vector<SweepRow> cmd_sweep(const ExperimentConfig& config, const std::string& parameter,
                                const std::vector<double>& values,
                                const std::filesystem::path& out_dir, std::ostream& out);

/// Process exit code for an exception escaping a command: 1 for invalid
/// input or configuration, 2 for runtime failures.
int exit_code_for(const std::exception& e);

}  // namespace tmsv::app
