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

// Fits the two squeezer settings to a measured covariance matrix under the
// fixture loss budget and prints the result as a config fragment.
//
//   tmsv_fit_sources fixtures/measured_covariance.txt

#include <iostream>
#include <numbers>

#include <fmt/format.h>

#include "tmsv/metrics.hpp"
#include "tmsv_app/commands.hpp"
#include "tmsv_app/source_fit.hpp"

int main(int argc, char** argv) {
  if (argc != 2) {
    std::cerr << "usage: tmsv_fit_sources <partial-covariance.txt>\n";
    return 1;
  }
  try {
    const auto measured = tmsv::read_partial_covariance(argv[1]);
    const auto budget = tmsv::app::reference_loss_budget();
    const auto fit = tmsv::app::fit_sources(measured, budget, std::numbers::pi / 2.0);
    const auto c = tmsv::evaluate_criteria(fit.fitted_cov);
    fmt::print("# fitted to {} ({} measured entries), residual rms {:.4f}\n", argv[1],
               measured.measured_count(), fit.residual_rms);
    fmt::print("# source A {}, source B {}\n", fit.a_on_bound ? "on the bound vs*va = 1" : "free",
               fit.b_on_bound ? "on the bound vs*va = 1" : "free");
    fmt::print("# model Duan {:.5f}, EPR-Reid A|B {:.5f}, B|A {:.5f}\n", c.duan, c.epr_a_from_b,
               c.epr_b_from_a);
    fmt::print("sources:\n  a: {{vs: {:.17g}, va: {:.17g}, angle_rad: 0}}\n", fit.source_a.vs,
               fit.source_a.va);
    fmt::print("  b: {{vs: {:.17g}, va: {:.17g}, angle_rad: 0}}\n", fit.source_b.vs, fit.source_b.va);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return tmsv::app::exit_code_for(e);
  }
  return 0;
}
