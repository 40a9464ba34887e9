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

#include <functional>

#include <Eigen/Dense>

namespace tmsv {

using ResidualFunction = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

struct LevenbergMarquardtOptions {
  int max_iterations = 200;
  double gradient_tolerance = 1e-12;
  double step_tolerance = 1e-12;
  double initial_damping = 1e-3;
};

struct LevenbergMarquardtResult {
  Eigen::VectorXd params;
  double cost = 0.0;  // 0.5 * |r|^2
  int iterations = 0;
  bool converged = false;
};

/// Minimizes 0.5 * |residual(p)|^2 with a damped Gauss-Newton iteration.
/// The Jacobian is taken by central differences.
LevenbergMarquardtResult levenberg_marquardt(const ResidualFunction& residual,
                                             Eigen::VectorXd initial,
                                             const LevenbergMarquardtOptions& options = {});

}  // namespace tmsv
