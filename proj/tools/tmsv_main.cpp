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

// tmsv: virtual two-mode squeezing experiment.
//
//   tmsv model    --config reference.yaml
//   tmsv simulate --config reference.yaml --out data/
//   tmsv analyze  data/ --out results/
//   tmsv locksim  --config reference.yaml [--long-tests]
//   tmsv sweep    --config reference.yaml --param budget.arm_a.0.efficiency --values 0.8,0.9,1

#include <iostream>
#include <optional>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "tmsv_app/commands.hpp"
#include "tmsv_app/config.hpp"

namespace {

struct Options {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  bool paper_scale = false;
  bool long_tests = false;
  std::string out_dir;
  std::string dataset;
  std::string param;
  std::vector<double> values;
};

tmsv::app::ExperimentConfig resolve(const Options& o) {
  tmsv::app::ExperimentConfig c =
      o.config_path.empty() ? tmsv::app::ExperimentConfig{} : tmsv::app::load_config(o.config_path);
  if (o.seed) c.seed = *o.seed;
  if (o.paper_scale) c.apply_paper_scale();
  c.validate();
  return c;
}

std::filesystem::path out_dir(const Options& o, const tmsv::app::ExperimentConfig& c) {
  return o.out_dir.empty() ? c.output_dir : std::filesystem::path(o.out_dir);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Virtual two-mode squeezed vacuum experiment"};
  app.require_subcommand(1);
  app.fallthrough();
  Options o;
  app.add_option("--config", o.config_path, "experiment config (YAML) or run manifest");
  app.add_option("--seed", o.seed, "override the root seed");
  app.add_flag("--paper-scale", o.paper_scale, "1e6 samples per setting, 1e4 bootstrap chunks of 2e5");
  app.add_flag("--long-tests", o.long_tests, "locksim: run the long endurance duration");
  app.add_option("--out", o.out_dir, "output directory (default: output_dir from the config)");

  auto* model = app.add_subcommand("model", "analytic model: covariance, criteria, loss budget");
  auto* simulate = app.add_subcommand("simulate", "synthesize the six raw detector runs");
  auto* analyze = app.add_subcommand("analyze", "demodulate, reconstruct and bootstrap a dataset");
  analyze->add_option("dataset", o.dataset, "directory containing manifest.yaml")->required();
  auto* locksim = app.add_subcommand("locksim", "phase-lock stability trace");
  auto* sweep = app.add_subcommand("sweep", "re-evaluate the model over one numeric field");
  sweep->add_option("--param", o.param, "dotted config path, e.g. budget.arm_a.0.efficiency");
  sweep->add_option("--values", o.values, "comma-separated values")->delimiter(',');

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (model->parsed()) {
      tmsv::app::cmd_model(resolve(o), std::cout);
    } else if (simulate->parsed()) {
      const auto c = resolve(o);
      tmsv::app::cmd_simulate(c, out_dir(o, c), std::cout);
    } else if (analyze->parsed()) {
      std::optional<tmsv::app::ExperimentConfig> override;
      if (!o.config_path.empty() || o.seed || o.paper_scale) override = resolve(o);
      const auto dir = o.out_dir.empty() ? std::filesystem::path(o.dataset) / "analysis"
                                         : std::filesystem::path(o.out_dir);
      tmsv::app::cmd_analyze(o.dataset, override ? &*override : nullptr, dir, std::cout);
    } else if (locksim->parsed()) {
      const auto c = resolve(o);
      tmsv::app::cmd_locksim(c, o.long_tests, out_dir(o, c), std::cout);
    } else if (sweep->parsed()) {
      const auto c = resolve(o);
      tmsv::app::cmd_sweep(c, o.param.empty() ? c.sweep.parameter : o.param,
                           o.values.empty() ? c.sweep.values : o.values, out_dir(o, c), std::cout);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return tmsv::app::exit_code_for(e);
  }
  return 0;
}
