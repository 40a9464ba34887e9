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

#include "tmsv_app/commands.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <ostream>

#include <fmt/format.h>
#include <fmt/ostream.h>

#include "tmsv/random.hpp"
#include "tmsv/raw_io.hpp"
#include "tmsv_app/manifest.hpp"

namespace tmsv::app {
namespace {

constexpr const char* kLabels[] = {"X_A", "P_A", "X_B", "P_B"};

void print_matrix(std::ostream& out, const Eigen::Matrix4d& m) {
  fmt::print(out, "{:>10}", "");
  for (const char* l : kLabels) fmt::print(out, "{:>11}", l);
  fmt::print(out, "\n");
  for (int i = 0; i < 4; ++i) {
    fmt::print(out, "{:>10}", kLabels[i]);
    for (int j = 0; j < 4; ++j) fmt::print(out, "{:>11.4f}", m(i, j));
    fmt::print(out, "\n");
  }
}

void print_criteria(std::ostream& out, const EntanglementCriteria& c, std::string_view indent = "  ") {
  // no "-0.000 dB" for values sitting on a bound
  auto db = [](double v, double crit) {
    const double d = to_db(v, crit);
    return std::abs(d) < 5e-4 ? 0.0 : d;
  };
  fmt::print(out, "{}Duan              {:.5f}   {:7.3f} dB below 4\n", indent, c.duan, db(c.duan, kDuanCritical));
  fmt::print(out, "{}Var(X_A + X_B)    {:.5f}   {:7.3f} dB below vacuum\n", indent, c.var_x_sum,
             db(c.var_x_sum, 2.0));
  fmt::print(out, "{}Var(P_A - P_B)    {:.5f}   {:7.3f} dB below vacuum\n", indent, c.var_p_diff,
             db(c.var_p_diff, 2.0));
  fmt::print(out, "{}EPR-Reid A from B {:.5f}   {:7.3f} dB below 1\n", indent, c.epr_a_from_b,
             db(c.epr_a_from_b, kEprReidCritical));
  fmt::print(out, "{}EPR-Reid B from A {:.5f}   {:7.3f} dB below 1\n", indent, c.epr_b_from_a,
             db(c.epr_b_from_a, kEprReidCritical));
}

std::ofstream open_output(const std::filesystem::path& path) {
  std::ofstream f(path);
  if (!f) throw Error(ErrorKind::kIoError, fmt::format("{}: cannot open for writing", path.string()));
  return f;
}

void ensure_dir(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error(ErrorKind::kIoError, fmt::format("{}: {}", dir.string(), ec.message()));
}

YAML::Node criteria_yaml(const EntanglementCriteria& c) {
  YAML::Node n;
  n["duan"] = c.duan;
  n["duan_db"] = to_db(c.duan, kDuanCritical);
  n["var_x_sum"] = c.var_x_sum;
  n["var_x_sum_db"] = to_db(c.var_x_sum, 2.0);
  n["var_p_diff"] = c.var_p_diff;
  n["var_p_diff_db"] = to_db(c.var_p_diff, 2.0);
  n["epr_reid_AB"] = c.epr_a_from_b;
  n["epr_reid_AB_db"] = to_db(c.epr_a_from_b, kEprReidCritical);
  n["epr_reid_BA"] = c.epr_b_from_a;
  n["epr_reid_BA_db"] = to_db(c.epr_b_from_a, kEprReidCritical);
  return n;
}

double critical_of(Statistic s) {
  switch (s) {
    case Statistic::kDuan: return kDuanCritical;
    case Statistic::kEprReidAB:
    case Statistic::kEprReidBA: return kEprReidCritical;
    case Statistic::kVarianceXSum:
    case Statistic::kVariancePDiff: return 2.0;
  }
  return 1.0;
}

}  // namespace

ModelReport cmd_model(const ExperimentConfig& config, std::ostream& out) {
  config.validate();
  ModelReport r;
  r.gamma = model_covariance(config);
  r.criteria = evaluate_criteria(r.gamma);
  const double dark = config.acquisition.dark_noise_db;
  r.expected_without_dark_subtraction =
      evaluate_criteria(expected_measured_covariance(r.gamma, dark, false));
  r.expected_with_dark_subtraction = evaluate_criteria(expected_measured_covariance(r.gamma, dark, true));
  r.total_efficiency_a = config.setup.budget.total_a();
  r.total_efficiency_b = config.setup.budget.total_b();

  fmt::print(out, "sources: A vs={:.5g} va={:.5g}   B vs={:.5g} va={:.5g}   phi_ent={:.6f} rad\n",
             config.setup.source_a.vs, config.setup.source_a.va, config.setup.source_b.vs,
             config.setup.source_b.va, config.setup.phi_ent);
  fmt::print(out, "\nmodel covariance at the detectors (shot-noise units):\n");
  print_matrix(out, r.gamma);
  fmt::print(out, "\ncriteria:\n");
  print_criteria(out, r.criteria);
  fmt::print(out, "  entangled: {}   EPR paradox: {}\n", r.criteria.inseparable() ? "yes" : "no",
             r.criteria.epr_paradox() ? "yes" : "no");
  fmt::print(out, "\nexpected analysis output without dark subtraction (dark {} dB):\n", dark);
  print_criteria(out, r.expected_without_dark_subtraction);

  fmt::print(out, "\nloss budget:\n");
  for (auto [arm, name] : {std::pair{&config.setup.budget.arm_a, "A"}, {&config.setup.budget.arm_b, "B"}}) {
    double cumulative = 1.0;
    fmt::print(out, "  arm {}\n", name);
    for (const auto& e : *arm) {
      cumulative *= e.efficiency;
      fmt::print(out, "    {:<42} {:.5f}   cumulative {:.5f}\n", e.label, e.efficiency, cumulative);
    }
  }
  fmt::print(out, "  total efficiency: A {:.5f}, B {:.5f}\n", r.total_efficiency_a, r.total_efficiency_b);
  return r;
}

SimulateResult cmd_simulate(const ExperimentConfig& config, const std::filesystem::path& out_dir,
                            std::ostream& out) {
  config.validate();
  ensure_dir(out_dir);
  const YAML::Node config_yaml = to_yaml(config);
  Manifest manifest;
  manifest.seed = config.seed;
  manifest.config = config_yaml;
  manifest.config_sha256 = sha256_hex(emit_yaml(config_yaml));

  SimulateResult result;
  for (const RunPlan& plan : plan_runs(config)) {
    const std::string file = fmt::format("run_{}.tmsv", plan.name);
    const auto path = out_dir / file;
    RfSynthesizer synth(plan.synth);
    for (const auto& w : synth.warnings()) fmt::print(out, "warning [{}]: {}\n", plan.name, w);
    {
      RawWriter writer(path, plan.synth.sample_rate_hz, 2, plan.synth.vacuum_scale);
      constexpr Eigen::Index kBlock = 1 << 15;
      Eigen::Matrix<double, 2, Eigen::Dynamic> block(2, kBlock);
      std::uint64_t done = 0;
      while (done < plan.synth.n_samples) {
        const auto len = static_cast<Eigen::Index>(
            std::min<std::uint64_t>(kBlock, plan.synth.n_samples - done));
        auto view = block.leftCols(len);
        synth.generate(view);
        writer.write(std::span<const double>(block.data(), static_cast<std::size_t>(2 * len)));
        done += static_cast<std::uint64_t>(len);
      }
      writer.close();
    }
    manifest.runs.push_back({plan.name, file, plan.synth.seed, plan.synth.n_samples, sha256_file(path)});
    result.files.push_back(path);
    fmt::print(out, "wrote {} ({} samples x 2 channels)\n", path.string(), plan.synth.n_samples);
  }
  result.manifest = out_dir / "manifest.yaml";
  write_manifest(result.manifest, manifest);
  fmt::print(out, "wrote {}\n", result.manifest.string());
  return result;
}

Dataset load_dataset(const std::filesystem::path& dataset_dir, const ExperimentConfig& config,
                     bool verify_hashes) {
  const Manifest manifest = read_manifest(dataset_dir / "manifest.yaml");
  Dataset dataset;
  for (const RunPlan& plan : plan_runs(config)) {
    const bool calibration = plan.kind != RunKind::kSignal;
    const ManifestRun* entry = nullptr;
    for (const auto& r : manifest.runs)
      if (r.name == plan.name) entry = &r;
    const auto path = entry ? dataset_dir / entry->file : std::filesystem::path();
    if (!entry || !std::filesystem::exists(path)) {
      throw Error(calibration ? ErrorKind::kCalibrationFailure : ErrorKind::kIncompleteTomography,
                  fmt::format("dataset {} lacks the {} run", dataset_dir.string(), plan.name));
    }
    if (verify_hashes && !entry->sha256.empty() && sha256_file(path) != entry->sha256) {
      throw Error(ErrorKind::kIoError, fmt::format("{}: SHA-256 does not match manifest", path.string()));
    }
    RawReader reader(path);
    if (reader.header().n_channels != 2) {
      throw Error(ErrorKind::kIoError, fmt::format("{}: expected 2 channels", path.string()));
    }
    if (reader.header().sample_rate != plan.synth.sample_rate_hz) {
      throw Error(ErrorKind::kConfigError,
                  fmt::format("{}: recorded at {} Hz, config expects {} Hz", path.string(),
                              reader.header().sample_rate, plan.synth.sample_rate_hz));
    }
    DemodulatedRun run;
    run.plan = plan;
    Demodulator da(plan.demod_a, reader.header().sample_rate);
    Demodulator db(plan.demod_b, reader.header().sample_rate);
    run.a.effective_rate = da.output_rate();
    run.b.effective_rate = db.output_rate();
    std::vector<double> buf;
    while (reader.read(buf, 1 << 15) > 0) {
      const std::span<const double> all(buf);
      da.push(all, run.a.values, 2);
      db.push(all.subspan(1), run.b.values, 2);
    }
    run.a.values.resize(std::min<std::size_t>(run.a.values.size(), plan.n_outputs));
    run.b.values.resize(std::min<std::size_t>(run.b.values.size(), plan.n_outputs));
    dataset.runs.push_back(std::move(run));
  }
  return dataset;
}

AnalysisResult cmd_analyze(const std::filesystem::path& dataset_dir,
                           const ExperimentConfig* config_override,
                           const std::filesystem::path& out_dir, std::ostream& out) {
  if (!std::filesystem::exists(dataset_dir / "manifest.yaml")) {
    throw Error(ErrorKind::kIoError, fmt::format("{}: no manifest.yaml", dataset_dir.string()));
  }
  const ExperimentConfig config =
      config_override ? *config_override : load_config(dataset_dir / "manifest.yaml");
  config.validate();
  const Dataset dataset = load_dataset(dataset_dir, config);
  const AnalysisResult result = analyze(dataset, config);
  ensure_dir(out_dir);

  fmt::print(out, "calibration: vacuum variance A {:.6g}, B {:.6g}; dark variance A {:.6g}, B {:.6g}\n",
             result.cal_a.vacuum_variance, result.cal_b.vacuum_variance, result.cal_a.dark_variance,
             result.cal_b.dark_variance);
  YAML::Node report;
  report["dataset"] = dataset_dir.string();
  report["primary_mode"] = result.primary_subtracts_dark ? "dark_subtracted" : "raw";
  {
    auto cov_csv = open_output(out_dir / "covariance.csv");
    cov_csv << "mode,row,col,measured,estimate,standard_error\n";
    for (const ModeAnalysis* mode : {&result.without_dark_subtraction, &result.with_dark_subtraction}) {
      const char* name = mode->subtract_dark ? "dark_subtracted" : "raw";
      const auto& est = mode->reconstruction.estimate;
      fmt::print(out, "\nreconstructed covariance ({}):\n", name);
      print_matrix(out, est.cov);
      for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j)
          fmt::print(cov_csv, "{},{},{},{},{:.10g},{:.6g}\n", name, kLabels[i], kLabels[j],
                     est.measured(i, j) ? 1 : 0, est.cov(i, j), mode->reconstruction.standard_error(i, j));
      fmt::print(out, "criteria from same-run moments ({}):\n", name);
      print_criteria(out, mode->criteria);
      report["reconstruction"][name] = criteria_yaml(mode->criteria);
    }
  }

  const char* primary = result.primary_subtracts_dark ? "dark subtracted" : "raw";
  fmt::print(out, "\nbootstrap ({} chunks of {}, {} variances):\n", config.bootstrap.n_chunks,
             config.bootstrap.chunk_len, primary);
  for (const auto& b : result.bootstrap) {
    const auto& r = b.result;
    const double crit = critical_of(b.statistic);
    fmt::print(out, "  {:<16} {:.5f} +- {:.5f}   {:7.3f} dB{}{}\n", to_string(b.statistic), r.fit_mean,
               r.fit_sigma, to_db(r.fit_mean, crit), r.fit_fallback ? "   (moment fallback)" : "",
               r.excluded_chunks ? fmt::format("   ({} chunks excluded)", r.excluded_chunks) : "");
    YAML::Node n;
    n["fit_mean"] = r.fit_mean;
    n["fit_sigma"] = r.fit_sigma;
    n["fit_mean_db"] = to_db(r.fit_mean, crit);
    n["sample_mean"] = r.sample_mean;
    n["sample_sigma"] = r.sample_sigma;
    n["excluded_chunks"] = r.excluded_chunks;
    n["fit_fallback"] = r.fit_fallback;
    report["bootstrap"][std::string(to_string(b.statistic))] = n;
    auto hist = open_output(out_dir / fmt::format("histogram_{}.csv", to_string(b.statistic)));
    write_histogram_csv(hist, r);
  }
  const bool entangled = significantly_below(result.bootstrap_of(Statistic::kDuan), kDuanCritical);
  const bool epr = significantly_below(result.bootstrap_of(Statistic::kEprReidAB), kEprReidCritical) ||
                   significantly_below(result.bootstrap_of(Statistic::kEprReidBA), kEprReidCritical);
  fmt::print(out, "entangled: {}\nEPR paradox: {}\n", entangled ? "yes" : "no", epr ? "yes" : "no");
  report["entangled"] = entangled;
  report["epr_paradox"] = epr;
  auto f = open_output(out_dir / "analysis.yaml");
  f << emit_yaml(report);
  return result;
}

LocksimResult cmd_locksim(const ExperimentConfig& config, bool long_tests,
                          const std::filesystem::path& out_dir, std::ostream& out) {
  config.validate();
  const double duration = long_tests ? config.locks.long_duration_s : config.locks.duration_s;
  LocksimResult r;
  r.trace = stability_trace(config.setup, config.locks.system, duration, config.locks.window_s,
                            derive_seed(config.seed, 100), config.locks.trace_sample_rate_hz);
  for (const auto* series : {&r.trace.var_x_sum_db, &r.trace.var_p_diff_db}) {
    double mean = 0.0;
    for (double v : *series) mean += v;
    mean /= static_cast<double>(series->size());
    for (double v : *series) r.max_deviation_db = std::max(r.max_deviation_db, std::abs(v - mean));
  }
  r.flat = r.max_deviation_db < kFlatTraceToleranceDb;
  PhaseJitter residual;
  for (const auto& l : r.trace.loops) {
    if (l.name == config.locks.system.phi_ent.name) residual.phi_ent = l.rms_rad;
    if (l.name == config.locks.system.phi_a.name) residual.phi_a = l.rms_rad;
    if (l.name == config.locks.system.phi_b.name) residual.phi_b = l.rms_rad;
  }
  r.degradation = jitter_to_entanglement(config.setup, residual);

  ensure_dir(out_dir);
  auto csv = open_output(out_dir / "stability_trace.csv");
  write_stability_csv(csv, r.trace);
  fmt::print(out, "simulated {} s in {} windows of {} s\n", duration, r.trace.size(), config.locks.window_s);
  for (const auto& l : r.trace.loops) {
    fmt::print(out, "  lock {:<8} residual rms {:.3e} rad, saturation events {}\n", l.name, l.rms_rad,
               l.saturation_events);
    if (l.saturation_events > 0) {
      fmt::print(out, "  warning: lock {} hit its actuator range {} times\n", l.name, l.saturation_events);
    }
  }
  fmt::print(out, "max deviation from trace mean: {:.3f} dB (statistical scatter {:.3f} dB per point)\n",
             r.max_deviation_db, r.trace.predicted_scatter_db);
  fmt::print(out, "flat within {} dB: {}\n", kFlatTraceToleranceDb, r.flat ? "yes" : "no");
  fmt::print(out, "Duan at these residuals: {:.5f} (jitter-free {:.5f}, {:+.3f}%)\n", r.degradation.degraded.duan,
             r.degradation.base.duan, 100.0 * r.degradation.duan_relative_increase());
  return r;
}

std::vector<SweepRow> cmd_sweep(const ExperimentConfig& config, const std::string& parameter,
                                const std::vector<double>& values,
                                const std::filesystem::path& out_dir, std::ostream& out) {
  if (parameter.empty()) throw ConfigError("sweep.parameter", "no parameter path given");
  if (values.empty()) throw ConfigError("sweep.values", "no values given");
  const YAML::Node base = to_yaml(config);
  std::vector<SweepRow> rows;
  for (double v : values) {
    YAML::Node node = YAML::Clone(base);
    set_numeric(node, parameter, v);
    const ExperimentConfig c = parse_config(node);
    rows.push_back({v, evaluate_criteria(model_covariance(c))});
  }
  ensure_dir(out_dir);
  auto csv = open_output(out_dir / "sweep.csv");
  csv << "value,duan,duan_db,epr_reid_AB,epr_reid_BA,epr_reid_AB_db,var_x_sum_db,var_p_diff_db\n";
  fmt::print(out, "{:>14} {:>10} {:>9} {:>10} {:>10}\n", parameter.size() > 14 ? "value" : parameter, "duan",
             "duan_dB", "epr_AB", "epr_BA");
  for (const auto& r : rows) {
    const auto& c = r.criteria;
    fmt::print(csv, "{:.10g},{:.10g},{:.6f},{:.10g},{:.10g},{:.6f},{:.6f},{:.6f}\n", r.value, c.duan,
               to_db(c.duan, kDuanCritical), c.epr_a_from_b, c.epr_b_from_a,
               to_db(c.epr_a_from_b, kEprReidCritical), to_db(c.var_x_sum, 2.0), to_db(c.var_p_diff, 2.0));
    fmt::print(out, "{:>14.6g} {:>10.5f} {:>9.3f} {:>10.5f} {:>10.5f}\n", r.value, c.duan,
               to_db(c.duan, kDuanCritical), c.epr_a_from_b, c.epr_b_from_a);
  }
  return rows;
}

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const ConfigError*>(&e)) return 1;
  if (const auto* err = dynamic_cast<const Error*>(&e)) {
    switch (err->kind()) {
      case ErrorKind::kInvalidArgument:
      case ErrorKind::kUnphysicalSetting:
      case ErrorKind::kUnphysicalState:
      case ErrorKind::kConfigError:
        return 1;
      default:
        return 2;
    }
  }
  return 2;
}

}  // namespace tmsv::app
