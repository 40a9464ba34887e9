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

#include "tmsv/gaussian_state.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>

#include <Eigen/Eigenvalues>
#include <fmt/format.h>

#include "tmsv/error.hpp"
#include "tmsv/quadrature_rules.hpp"

namespace tmsv {
namespace {

constexpr std::size_t kJitterQuadratureOrder = 21;

Eigen::Matrix2d rotation(double phi) {
  const double c = std::cos(phi);
  const double s = std::sin(phi);
  Eigen::Matrix2d r;
  r << c, s, -s, c;
  return r;
}

// [[0, 1], [-1, 0]]: rotation(phi) = cos(phi) I + sin(phi) J.
Eigen::Matrix2d quarter_turn() {
  Eigen::Matrix2d j;
  j << 0.0, 1.0, -1.0, 0.0;
  return j;
}

void check_mode(const GaussianState& state, std::size_t mode) {
  if (mode >= state.n_modes()) {
    throw Error(ErrorKind::kInvalidArgument,
                fmt::format("mode index {} out of range for {}-mode state", mode,
                            state.n_modes()));
  }
}

Eigen::MatrixXd symmetrized(const Eigen::MatrixXd& m) {
  return 0.5 * (m + m.transpose());
}

// Applies a 2x2 transformation to the quadratures of one mode.
void transform_mode(Eigen::VectorXd& mean, Eigen::MatrixXd& cov, std::size_t mode,
                    const Eigen::Matrix2d& s) {
  const auto k = static_cast<Eigen::Index>(2 * mode);
  mean.segment<2>(k) = s * mean.segment<2>(k);
  cov.middleRows(k, 2) = (s * cov.middleRows(k, 2)).eval();
  cov.middleCols(k, 2) = (cov.middleCols(k, 2) * s.transpose()).eval();
}

const QuadratureRule& unit_hermite_rule() {
  static const QuadratureRule rule = gauss_hermite(kJitterQuadratureOrder);
  return rule;
}

}  // namespace

GaussianState make_unchecked(Eigen::VectorXd mean, Eigen::MatrixXd cov) {
  return GaussianState(std::move(mean), symmetrized(cov), GaussianState::Unchecked{});
}

GaussianState::GaussianState(Eigen::VectorXd mean, Eigen::MatrixXd cov, Unchecked)
    : mean_(std::move(mean)), cov_(std::move(cov)) {}

GaussianState::GaussianState(Eigen::VectorXd mean, Eigen::MatrixXd cov)
    : mean_(std::move(mean)), cov_(std::move(cov)) {
  if (cov_.rows() != cov_.cols() || cov_.rows() == 0 || cov_.rows() % 2 != 0) {
    throw Error(ErrorKind::kInvalidArgument,
                fmt::format("covariance must be square with even dimension, got {}x{}",
                            cov_.rows(), cov_.cols()));
  }
  if (mean_.size() != cov_.rows()) {
    throw Error(ErrorKind::kInvalidArgument, "mean vector length must match covariance");
  }
  const double scale = std::max(1.0, cov_.cwiseAbs().maxCoeff());
  if ((cov_ - cov_.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) {
    throw Error(ErrorKind::kInvalidArgument, "covariance is not symmetric");
  }
  if ((cov_.diagonal().array() <= 0.0).any()) {
    throw Error(ErrorKind::kInvalidArgument, "covariance diagonal must be positive");
  }
  cov_ = symmetrized(cov_);
  if (!is_physical(cov_)) {
    throw Error(ErrorKind::kUnphysicalState,
                fmt::format("covariance violates the uncertainty relation (margin {:.3e})",
                            uncertainty_margin(cov_)));
  }
}

Eigen::Matrix2d GaussianState::mode_block(std::size_t mode) const {
  const auto k = static_cast<Eigen::Index>(2 * mode);
  return cov_.block<2, 2>(k, k);
}

void SqueezerSetting::validate() const {
  if (!std::isfinite(vs) || !std::isfinite(va) || !std::isfinite(angle)) {
    throw Error(ErrorKind::kInvalidArgument, "squeezer parameters must be finite");
  }
  if (vs <= 0.0 || vs > 1.0 + 1e-12 || va < 1.0 - 1e-12) {
    throw Error(ErrorKind::kInvalidArgument,
                fmt::format("squeezer requires 0 < vs <= 1 <= va, got vs={}, va={}", vs, va));
  }
  if (vs * va < 1.0 - 1e-12) {
    throw Error(ErrorKind::kUnphysicalSetting,
                fmt::format("vs * va = {} violates the uncertainty relation", vs * va));
  }
}

double LossBudget::total_a() const {
  double total = 1.0;
  for (const auto& entry : arm_a) total *= entry.efficiency;
  return total;
}

double LossBudget::total_b() const {
  double total = 1.0;
  for (const auto& entry : arm_b) total *= entry.efficiency;
  return total;
}

void LossBudget::validate() const {
  for (const auto* arm : {&arm_a, &arm_b}) {
    for (const auto& entry : *arm) {
      if (!(entry.efficiency > 0.0 && entry.efficiency <= 1.0)) {
        throw Error(ErrorKind::kInvalidArgument,
                    fmt::format("loss factor '{}' has efficiency {} outside (0, 1]",
                                entry.label, entry.efficiency));
      }
    }
  }
}

PhaseMoments PhaseMoments::from_samples(const double* phases, std::size_t count) {
  if (count == 0) {
    throw Error(ErrorKind::kInvalidArgument, "phase moments need at least one sample");
  }
  PhaseMoments m{0.0, 0.0, 0.0, 0.0};
  for (std::size_t i = 0; i < count; ++i) {
    m.cos1 += std::cos(phases[i]);
    m.sin1 += std::sin(phases[i]);
    m.cos2 += std::cos(2.0 * phases[i]);
    m.sin2 += std::sin(2.0 * phases[i]);
  }
  const double inv = 1.0 / static_cast<double>(count);
  m.cos1 *= inv;
  m.sin1 *= inv;
  m.cos2 *= inv;
  m.sin2 *= inv;
  return m;
}

Eigen::MatrixXd symplectic_form(std::size_t n_modes) {
  const auto n = static_cast<Eigen::Index>(2 * n_modes);
  Eigen::MatrixXd omega = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index k = 0; k < n; k += 2) {
    omega(k, k + 1) = 1.0;
    omega(k + 1, k) = -1.0;
  }
  return omega;
}

double uncertainty_margin(const Eigen::MatrixXd& cov) {
  const Eigen::MatrixXd omega = symplectic_form(static_cast<std::size_t>(cov.rows() / 2));
  const Eigen::MatrixXcd h =
      cov.cast<std::complex<double>>() + std::complex<double>(0.0, 1.0) * omega;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(h, Eigen::EigenvaluesOnly);
  return solver.eigenvalues().minCoeff();
}

bool is_physical(const Eigen::MatrixXd& cov, double tolerance) {
  if (cov.rows() != cov.cols() || cov.rows() % 2 != 0 || !cov.allFinite()) return false;
  return uncertainty_margin(cov) >= -tolerance;
}

Eigen::VectorXd symplectic_eigenvalues(const Eigen::MatrixXd& cov) {
  const auto n_modes = static_cast<std::size_t>(cov.rows() / 2);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
  if (eig.eigenvalues().minCoeff() <= 0.0) {
    throw Error(ErrorKind::kInvalidArgument,
                "symplectic spectrum requires a positive-definite covariance");
  }
  const Eigen::MatrixXd root = eig.operatorSqrt();
  const Eigen::MatrixXcd omega =
      std::complex<double>(0.0, 1.0) * symplectic_form(n_modes).cast<std::complex<double>>();
  const Eigen::MatrixXcd h = root.cast<std::complex<double>>() * omega *
                             root.cast<std::complex<double>>();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(h, Eigen::EigenvaluesOnly);
  // Eigenvalues come in +/- pairs; the positive half is the symplectic spectrum.
  Eigen::VectorXd values = solver.eigenvalues().tail(static_cast<Eigen::Index>(n_modes));
  std::sort(values.begin(), values.end());
  return values;
}

GaussianState vacuum(std::size_t n_modes) {
  if (n_modes == 0) {
    throw Error(ErrorKind::kInvalidArgument, "vacuum needs at least one mode");
  }
  const auto n = static_cast<Eigen::Index>(2 * n_modes);
  return make_unchecked(Eigen::VectorXd::Zero(n), Eigen::MatrixXd::Identity(n, n));
}

GaussianState squeeze(const GaussianState& state, std::size_t mode,
                      const SqueezerSetting& setting) {
  check_mode(state, mode);
  setting.validate();
  Eigen::VectorXd mean = state.mean();
  Eigen::MatrixXd cov = state.cov();
  const auto k = static_cast<Eigen::Index>(2 * mode);
  const double thermal = std::sqrt(setting.vs * setting.va);
  cov.block<2, 2>(k, k) += (thermal - 1.0) * Eigen::Matrix2d::Identity();
  const double factor = std::pow(setting.vs / setting.va, 0.25);
  const Eigen::Matrix2d r = rotation(setting.angle);
  const Eigen::Matrix2d s =
      r * Eigen::Vector2d(factor, 1.0 / factor).asDiagonal() * r.transpose();
  transform_mode(mean, cov, mode, s);
  return make_unchecked(std::move(mean), std::move(cov));
}

GaussianState rotate(const GaussianState& state, std::size_t mode, double phi) {
  check_mode(state, mode);
  Eigen::VectorXd mean = state.mean();
  Eigen::MatrixXd cov = state.cov();
  transform_mode(mean, cov, mode, rotation(phi));
  return make_unchecked(std::move(mean), std::move(cov));
}

GaussianState beamsplitter(const GaussianState& state, std::size_t mode_i,
                           std::size_t mode_j, double transmittance) {
  check_mode(state, mode_i);
  check_mode(state, mode_j);
  if (mode_i == mode_j) {
    throw Error(ErrorKind::kInvalidArgument, "beam splitter needs two distinct modes");
  }
  if (!(transmittance >= 0.0 && transmittance <= 1.0)) {
    throw Error(ErrorKind::kInvalidArgument,
                fmt::format("transmittance {} outside [0, 1]", transmittance));
  }
  const double t = std::sqrt(transmittance);
  const double r = std::sqrt(1.0 - transmittance);
  const auto n = state.cov().rows();
  Eigen::MatrixXd s = Eigen::MatrixXd::Identity(n, n);
  for (Eigen::Index q = 0; q < 2; ++q) {
    const auto a = static_cast<Eigen::Index>(2 * mode_i) + q;
    const auto b = static_cast<Eigen::Index>(2 * mode_j) + q;
    s(a, a) = t;
    s(a, b) = -r;
    s(b, a) = r;
    s(b, b) = t;
  }
  return make_unchecked(s * state.mean(), s * state.cov() * s.transpose());
}

GaussianState loss(const GaussianState& state, std::size_t mode, double eta) {
  check_mode(state, mode);
  if (!(eta >= 0.0 && eta <= 1.0)) {
    throw Error(ErrorKind::kInvalidArgument, fmt::format("loss efficiency {} outside [0, 1]", eta));
  }
  const auto k = static_cast<Eigen::Index>(2 * mode);
  const double amp = std::sqrt(eta);
  Eigen::VectorXd mean = state.mean();
  Eigen::MatrixXd cov = state.cov();
  mean.segment<2>(k) *= amp;
  cov.middleRows(k, 2) *= amp;
  cov.middleCols(k, 2) *= amp;
  cov.block<2, 2>(k, k) += (1.0 - eta) * Eigen::Matrix2d::Identity();
  return make_unchecked(std::move(mean), std::move(cov));
}

GaussianState apply_phase_jitter(const GaussianState& state, std::size_t mode,
                                 double sigma_phi) {
  check_mode(state, mode);
  if (!(sigma_phi >= 0.0) || !std::isfinite(sigma_phi)) {
    throw Error(ErrorKind::kInvalidArgument, "phase jitter rms must be non-negative");
  }
  if (sigma_phi == 0.0) return state;
  const QuadratureRule& unit = unit_hermite_rule();
  const double node_scale = std::sqrt(2.0) * sigma_phi;
  const double weight_norm = 1.0 / std::sqrt(std::numbers::pi);
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(state.mean().size());
  Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(state.cov().rows(), state.cov().cols());
  for (std::size_t i = 0; i < unit.nodes.size(); ++i) {
    Eigen::VectorXd m = state.mean();
    Eigen::MatrixXd c = state.cov();
    transform_mode(m, c, mode, rotation(node_scale * unit.nodes[i]));
    const double w = weight_norm * unit.weights[i];
    mean += w * m;
    cov += w * c;
  }
  return make_unchecked(std::move(mean), std::move(cov));
}

GaussianState apply_phase_average(const GaussianState& state, std::size_t mode,
                                  const PhaseMoments& moments) {
  check_mode(state, mode);
  const auto k = static_cast<Eigen::Index>(2 * mode);
  const Eigen::Matrix2d j = quarter_turn();
  const double cc = 0.5 * (1.0 + moments.cos2);
  const double ss = 0.5 * (1.0 - moments.cos2);
  const double cs = 0.5 * moments.sin2;
  const Eigen::Matrix2d avg_rot = moments.cos1 * Eigen::Matrix2d::Identity() + moments.sin1 * j;

  Eigen::VectorXd mean = state.mean();
  Eigen::MatrixXd cov = state.cov();
  mean.segment<2>(k) = avg_rot * state.mean().segment<2>(k);
  // Off-diagonal blocks see the averaged rotation once; the mode's own block
  // sees it twice, which brings in the second harmonic.
  cov.middleRows(k, 2) = (avg_rot * state.cov().middleRows(k, 2)).eval();
  cov.middleCols(k, 2) = (state.cov().middleCols(k, 2) * avg_rot.transpose()).eval();
  // middleRows then middleCols overwrote the diagonal block with sin/cos
  // products of first moments; replace it with the exact second-moment form.
  const Eigen::Matrix2d block = state.cov().block<2, 2>(k, k);
  cov.block<2, 2>(k, k) = cc * block + cs * (j * block + block * j.transpose()) +
                          ss * (j * block * j.transpose());
  return make_unchecked(std::move(mean), std::move(cov));
}

GaussianState build_experiment(const SqueezerSetting& source_a,
                               const SqueezerSetting& source_b, double phi_ent,
                               const LossBudget& budget, const PhaseJitter& jitter) {
  budget.validate();
  GaussianState state = vacuum(2);
  state = squeeze(state, 0, source_a);
  state = squeeze(state, 1, source_b);
  state = rotate(state, 1, phi_ent);
  state = apply_phase_jitter(state, 1, jitter.phi_ent);
  state = beamsplitter(state, 0, 1, 0.5);
  for (const auto& entry : budget.arm_a) state = loss(state, 0, entry.efficiency);
  for (const auto& entry : budget.arm_b) state = loss(state, 1, entry.efficiency);
  state = apply_phase_jitter(state, 0, jitter.phi_a);
  state = apply_phase_jitter(state, 1, jitter.phi_b);
  return state;
}

GaussianState build_experiment(const ExperimentSetup& setup, const PhaseJitter& jitter) {
  return build_experiment(setup.source_a, setup.source_b, setup.phi_ent, setup.budget, jitter);
}

GaussianState build_experiment(const ExperimentSetup& setup, const PhaseMoments& phi_ent,
                               const PhaseMoments& phi_a, const PhaseMoments& phi_b) {
  setup.budget.validate();
  GaussianState state = vacuum(2);
  state = squeeze(state, 0, setup.source_a);
  state = squeeze(state, 1, setup.source_b);
  state = rotate(state, 1, setup.phi_ent);
  state = apply_phase_average(state, 1, phi_ent);
  state = beamsplitter(state, 0, 1, 0.5);
  for (const auto& entry : setup.budget.arm_a) state = loss(state, 0, entry.efficiency);
  for (const auto& entry : setup.budget.arm_b) state = loss(state, 1, entry.efficiency);
  state = apply_phase_average(state, 0, phi_a);
  state = apply_phase_average(state, 1, phi_b);
  return state;
}

}  // namespace tmsv
