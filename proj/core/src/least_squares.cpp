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

#include "tmsv/least_squares.hpp"

#include <algorithm>
#include <cmath>

namespace tmsv {
namespace {

Eigen::MatrixXd numeric_jacobian(const ResidualFunction& residual, const Eigen::VectorXd& p,
                                 Eigen::Index n_residuals) {
  Eigen::MatrixXd jac(n_residuals, p.size());
  for (Eigen::Index k = 0; k < p.size(); ++k) {
    const double h = 1e-6 * std::max(1.0, std::abs(p(k)));
    Eigen::VectorXd hi = p;
    Eigen::VectorXd lo = p;
    hi(k) += h;
    lo(k) -= h;
    jac.col(k) = (residual(hi) - residual(lo)) / (2.0 * h);
  }
  return jac;
}

}  // namespace

LevenbergMarquardtResult levenberg_marquardt(const ResidualFunction& residual,
                                             Eigen::VectorXd initial,
                                             const LevenbergMarquardtOptions& options) {
  LevenbergMarquardtResult result;
  result.params = std::move(initial);
  Eigen::VectorXd r = residual(result.params);
  result.cost = 0.5 * r.squaredNorm();
  double damping = options.initial_damping;

  for (int iter = 0; iter < options.max_iterations; ++iter) {
    result.iterations = iter + 1;
    const Eigen::MatrixXd jac = numeric_jacobian(residual, result.params, r.size());
    const Eigen::MatrixXd jtj = jac.transpose() * jac;
    const Eigen::VectorXd grad = jac.transpose() * r;
    if (grad.cwiseAbs().maxCoeff() <= options.gradient_tolerance * std::max(1.0, result.cost)) {
      result.converged = true;
      return result;
    }

    bool improved = false;
    for (int attempt = 0; attempt < 30 && !improved; ++attempt) {
      Eigen::MatrixXd lhs = jtj;
      lhs.diagonal() += damping * jtj.diagonal().cwiseMax(1e-12);
      const Eigen::VectorXd step = lhs.ldlt().solve(-grad);
      const Eigen::VectorXd trial = result.params + step;
      const Eigen::VectorXd r_trial = residual(trial);
      const double cost_trial = 0.5 * r_trial.squaredNorm();
      if (std::isfinite(cost_trial) && cost_trial < result.cost) {
        const bool tiny_step =
            step.norm() <= options.step_tolerance * (result.params.norm() + options.step_tolerance);
        result.params = trial;
        r = r_trial;
        const double rel_drop = (result.cost - cost_trial) / std::max(result.cost, 1e-300);
        result.cost = cost_trial;
        damping = std::max(damping / 3.0, 1e-12);
        improved = true;
        if (tiny_step || rel_drop < 1e-15) {
          result.converged = true;
          return result;
        }
      } else {
        damping *= 4.0;
      }
    }
    if (!improved) {
      // No downhill step at any damping: we are at a (numerical) minimum.
      result.converged = true;
      return result;
    }
  }
  return result;
}

}  // namespace tmsv
