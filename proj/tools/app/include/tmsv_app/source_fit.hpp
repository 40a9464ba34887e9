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

// Fit of the two squeezer settings to a measured partial covariance matrix
// for a fixed loss budget. The detector covariance is affine in
// (vs_a, va_a, vs_b, va_b), so the unconstrained problem is linear least
// squares; sources that come out below the uncertainty bound vs * va >= 1
// are pinned to the bound (vs = 1 / va) and the remaining parameters are
// refined by Levenberg-Marquardt.

#include "tmsv/gaussian_state.hpp"
#include "tmsv/metrics.hpp"

namespace tmsv::app {

struct SourceFit {
  SqueezerSetting source_a;
  SqueezerSetting source_b;
  bool a_on_bound = false;
  bool b_on_bound = false;
  /// RMS of (model - measured) over the measured entries.
  double residual_rms = 0.0;
  Eigen::Matrix4d fitted_cov = Eigen::Matrix4d::Zero();
};

SourceFit fit_sources(const PartialCovariance& measured, const LossBudget& budget, double phi_ent);

/// The fixture budget: both escape efficiencies, visibilities, the tap,
/// quantum efficiency and propagation, attributed to the detected arms.
LossBudget reference_loss_budget();

}  // namespace tmsv::app
