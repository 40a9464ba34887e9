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

// Covariance-matrix description of Gaussian optical states.
//
// Conventions used throughout the library:
//  * quadrature ordering (X_1, P_1, X_2, P_2, ...);
//  * shot-noise units, i.e. a vacuum mode has Var(X) = Var(P) = 1;
//  * the symplectic form is the block-diagonal matrix of [[0, 1], [-1, 0]];
//  * rotate(phi) maps X -> X cos(phi) + P sin(phi), so reading X after a
//    rotation by phi gives the quadrature a homodyne detector with LO phase
//    phi would measure.

#include <cstddef>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace tmsv {

/// Tolerance used when checking cov + i*Omega >= 0.
inline constexpr double kPhysicalityTolerance = 1e-9;

class GaussianState {
 public:
  /// Validating constructor: the covariance must be square with an even
  /// dimension, symmetric, have a strictly positive diagonal and satisfy the
  /// uncertainty relation. Throws Error otherwise.
  GaussianState(Eigen::VectorXd mean, Eigen::MatrixXd cov);

  std::size_t n_modes() const noexcept {
    return static_cast<std::size_t>(cov_.rows() / 2);
  }
  const Eigen::VectorXd& mean() const noexcept { return mean_; }
  const Eigen::MatrixXd& cov() const noexcept { return cov_; }

  /// 2x2 covariance block of a single mode.
  Eigen::Matrix2d mode_block(std::size_t mode) const;

 private:
  struct Unchecked {};
  GaussianState(Eigen::VectorXd mean, Eigen::MatrixXd cov, Unchecked);

  friend GaussianState make_unchecked(Eigen::VectorXd mean,
                                      Eigen::MatrixXd cov);

  Eigen::VectorXd mean_;
  Eigen::MatrixXd cov_;
};

/// Per-source squeezing. vs and va are independent so that sources with
/// excess anti-squeezing (vs * va > 1) can be described.
struct SqueezerSetting {
  double vs = 1.0;
  double va = 1.0;
  double angle = 0.0;

  void validate() const;
};

struct LossEntry {
  std::string label;
  double efficiency = 1.0;
};

/// Ordered loss factors of the two detected arms. Mode 0 is arm A, mode 1 is
/// arm B. Each factor is applied as a beam-splitter loss with the given
/// transmission, in list order.
struct LossBudget {
  std::vector<LossEntry> arm_a;
  std::vector<LossEntry> arm_b;

  double total_a() const;
  double total_b() const;
  void validate() const;
};

/// Everything needed to build the state arriving at the homodyne detectors.
struct ExperimentSetup {
  SqueezerSetting source_a;
  SqueezerSetting source_b;
  double phi_ent = 1.5707963267948966;
  LossBudget budget;
};

/// RMS of the residual lock jitter on each controlled phase, in radians.
struct PhaseJitter {
  double phi_ent = 0.0;
  double phi_a = 0.0;
  double phi_b = 0.0;
};

/// Trigonometric moments of a phase distribution: <cos p>, <sin p>,
/// <cos 2p>, <sin 2p>. These fully determine the average of a rotated
/// covariance matrix over that distribution.
struct PhaseMoments {
  double cos1 = 1.0;
  double sin1 = 0.0;
  double cos2 = 1.0;
  double sin2 = 0.0;

  static PhaseMoments from_samples(const double* phases, std::size_t count);
};

Eigen::MatrixXd symplectic_form(std::size_t n_modes);

/// Symplectic eigenvalues (one per mode, ascending) of a positive-definite
/// covariance matrix.
Eigen::VectorXd symplectic_eigenvalues(const Eigen::MatrixXd& cov);

/// Smallest eigenvalue of the Hermitian matrix cov + i*Omega.
double uncertainty_margin(const Eigen::MatrixXd& cov);

bool is_physical(const Eigen::MatrixXd& cov,
                 double tolerance = kPhysicalityTolerance);

GaussianState vacuum(std::size_t n_modes);

/// Prepares a squeezed thermal mode: isotropic noise sqrt(vs*va) - 1 is
/// added and a symplectic squeezer along `angle` is applied, so vacuum maps
/// to Var(X) = vs, Var(P) = va for angle 0.
GaussianState squeeze(const GaussianState& state, std::size_t mode,
                      const SqueezerSetting& setting);

GaussianState rotate(const GaussianState& state, std::size_t mode, double phi);

/// Real beam splitter: X_i -> t X_i - r X_j, X_j -> r X_i + t X_j (same for
/// P), with t = sqrt(transmittance).
GaussianState beamsplitter(const GaussianState& state, std::size_t mode_i,
                           std::size_t mode_j, double transmittance);

GaussianState loss(const GaussianState& state, std::size_t mode, double eta);

/// Averages a rotation of `mode` over phi ~ N(0, sigma_phi^2) with a 21-node
/// Gauss-Hermite rule.
GaussianState apply_phase_jitter(const GaussianState& state, std::size_t mode,
                                 double sigma_phi);

/// Averages a rotation of `mode` over an arbitrary phase distribution given
/// by its moments. Exact for any distribution.
GaussianState apply_phase_average(const GaussianState& state, std::size_t mode,
                                  const PhaseMoments& moments);

/// Squeeze both sources, rotate source B by phi_ent, combine on a balanced
/// beam splitter, then apply each arm's losses in budget order. Optional
/// lock jitter is averaged in at the point where each phase acts.
GaussianState build_experiment(const SqueezerSetting& source_a,
                               const SqueezerSetting& source_b, double phi_ent,
                               const LossBudget& budget,
                               const PhaseJitter& jitter = {});

GaussianState build_experiment(const ExperimentSetup& setup,
                               const PhaseJitter& jitter = {});

/// Same chain with each locked phase averaged over an empirical residual
/// distribution (phase errors of different loops treated as independent).
GaussianState build_experiment(const ExperimentSetup& setup, const PhaseMoments& phi_ent,
                               const PhaseMoments& phi_a, const PhaseMoments& phi_b);

}  // namespace tmsv
