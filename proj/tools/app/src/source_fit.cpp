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

#include "tmsv_app/source_fit.hpp"

#include <array>
#include <cmath>

#include "tmsv/error.hpp"
#include "tmsv/least_squares.hpp"

namespace tmsv::app {
namespace {

// Affine model gamma(p) = base + sum_k p_k basis_k restricted to the
// measured entries, as one matrix A (entries x 4) and offset b.
struct AffineModel {
  Eigen::MatrixXd a;
  Eigen::VectorXd b;
  Eigen::VectorXd y;

  Eigen::VectorXd residual(const Eigen::Vector4d& p) const { return a * p + b - y; }
};

Eigen::Matrix4d model_cov(const Eigen::Vector4d& p, const LossBudget& budget, double phi_ent) {
  return build_experiment(SqueezerSetting{p(0), p(1), 0.0}, SqueezerSetting{p(2), p(3), 0.0},
                          phi_ent, budget)
      .cov();
}

AffineModel linearize(const PartialCovariance& measured, const LossBudget& budget,
                      double phi_ent) {
  // Evaluation points stay inside the valid squeezer domain
  // (vs <= 1 <= va, vs * va >= 1) so the validating chain can be used.
  const Eigen::Vector4d p0(1.0, 2.0, 1.0, 2.0);
  const Eigen::Vector4d step(-0.5, 1.0, -0.5, 1.0);
  const Eigen::Matrix4d g0 = model_cov(p0, budget, phi_ent);
  std::array<Eigen::Matrix4d, 4> basis;
  for (int k = 0; k < 4; ++k) {
    Eigen::Vector4d p = p0;
    p(k) += step(k);
    basis[k] = (model_cov(p, budget, phi_ent) - g0) / step(k);
  }
  const int n = measured.measured_count();
  AffineModel m{Eigen::MatrixXd(n, 4), Eigen::VectorXd(n), Eigen::VectorXd(n)};
  int row = 0;
  for (int i = 0; i < 4; ++i) {
    for (int j = 0; j < 4; ++j) {
      if (!measured.measured(i, j)) continue;
      for (int k = 0; k < 4; ++k) m.a(row, k) = basis[k](i, j);
      m.b(row) = g0(i, j) - basis[0](i, j) * p0(0) - basis[1](i, j) * p0(1) -
                 basis[2](i, j) * p0(2) - basis[3](i, j) * p0(3);
      m.y(row) = measured.cov(i, j);
      ++row;
    }
  }
  return m;
}

}  // namespace

SourceFit fit_sources(const PartialCovariance& measured, const LossBudget& budget,
                      double phi_ent) {
  budget.validate();
  if (measured.measured_count() < 4) {
    throw Error(ErrorKind::kIncompleteTomography, "source fit needs at least four measured entries");
  }
  const AffineModel m = linearize(measured, budget, phi_ent);
  Eigen::Vector4d p = m.a.colPivHouseholderQr().solve(m.y - m.b);

  std::array<bool, 2> pinned{false, false};
  for (int pass = 0; pass < 2; ++pass) {
    bool changed = false;
    for (int s = 0; s < 2; ++s) {
      if (!pinned[s] && !(p(2 * s) * p(2 * s + 1) >= 1.0 && p(2 * s) > 0.0)) {
        pinned[s] = true;
        changed = true;
      }
    }
    if (!changed) break;
    // Free parameters: va of pinned sources (log-parametrized, vs = 1/va),
    // both entries of free sources.
    auto expand = [&](const Eigen::VectorXd& q) {
      Eigen::Vector4d full;
      int k = 0;
      for (int s = 0; s < 2; ++s) {
        if (pinned[s]) {
          const double va = std::exp(q(k++));
          full(2 * s) = 1.0 / va;
          full(2 * s + 1) = va;
        } else {
          full(2 * s) = q(k++);
          full(2 * s + 1) = q(k++);
        }
      }
      return full;
    };
    std::vector<double> init;
    for (int s = 0; s < 2; ++s) {
      if (pinned[s]) {
        init.push_back(std::log(std::max(p(2 * s + 1), 1.0)));
      } else {
        init.push_back(p(2 * s));
        init.push_back(p(2 * s + 1));
      }
    }
    const auto lm = levenberg_marquardt(
        [&](const Eigen::VectorXd& q) { return m.residual(expand(q)); },
        Eigen::Map<const Eigen::VectorXd>(init.data(), static_cast<Eigen::Index>(init.size())));
    if (!lm.converged) throw Error(ErrorKind::kFitFailure, "constrained source fit did not converge");
    p = expand(lm.params);
  }

  SourceFit fit;
  fit.source_a = {p(0), p(1), 0.0};
  fit.source_b = {p(2), p(3), 0.0};
  fit.a_on_bound = pinned[0];
  fit.b_on_bound = pinned[1];
  // Round-off can leave a pinned source a hair below the bound.
  for (SqueezerSetting* s : {&fit.source_a, &fit.source_b}) {
    if (s->vs * s->va < 1.0) s->vs = 1.0 / s->va;
  }
  fit.fitted_cov = build_experiment(fit.source_a, fit.source_b, phi_ent, budget).cov();
  fit.residual_rms = std::sqrt(m.residual(p).squaredNorm() / static_cast<double>(m.y.size()));
  return fit;
}

LossBudget reference_loss_budget() {
  const double vis2 = 0.995 * 0.995;
  LossBudget b;
  b.arm_a = {{"escape efficiency, second source", 0.975},
             {"entangling beam splitter visibility^2", vis2},
             {"lock tap-off", 0.99},
             {"homodyne visibility^2", vis2},
             {"photodiode quantum efficiency", 0.99},
             {"propagation", 0.99}};
  b.arm_b = {{"escape efficiency, first source", 0.96},
             {"entangling beam splitter visibility^2", vis2},
             {"homodyne visibility^2", vis2},
             {"photodiode quantum efficiency", 0.99},
             {"propagation", 0.99}};
  return b;
}

}  // namespace tmsv::app
