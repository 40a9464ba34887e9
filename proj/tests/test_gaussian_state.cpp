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


#include <cmath>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "tmsv/error.hpp"
#include "tmsv/gaussian_state.hpp"
#include "tmsv/metrics.hpp"
#include "tmsv/quadrature_rules.hpp"
#include "test_util.hpp"

namespace tmsv {
namespace {

using testing::kind_of;
using Eigen::Matrix2d;
using Eigen::MatrixXd;
using Eigen::VectorXd;

constexpr double kPi = std::numbers::pi;

// Rotation X -> X cos + P sin written out by hand.
Matrix2d rot(double phi) {
  Matrix2d r;
  r << std::cos(phi), std::sin(phi), -std::sin(phi), std::cos(phi);
  return r;
}

GaussianState two_mode_squeezed(double vs) {
  return build_experiment({vs, 1.0 / vs, 0.0}, {vs, 1.0 / vs, 0.0}, kPi / 2, {});
}

TEST(GaussianState, VacuumIsPhysicalWithUnitSymplecticEigenvalues) {
  const auto v = vacuum(3);
  EXPECT_EQ(v.n_modes(), 3u);
  EXPECT_TRUE(v.cov().isApprox(MatrixXd::Identity(6, 6)));
  const VectorXd nu = symplectic_eigenvalues(v.cov());
  for (int i = 0; i < 3; ++i) EXPECT_NEAR(nu(i), 1.0, 1e-12);
  EXPECT_NEAR(uncertainty_margin(v.cov()), 0.0, 1e-12);
}

TEST(GaussianState, ConstructorRejectsBadMatrices) {
  MatrixXd odd = MatrixXd::Identity(3, 3);
  EXPECT_EQ(kind_of([&] { GaussianState(VectorXd::Zero(3), odd); }), ErrorKind::kInvalidArgument);
  MatrixXd asym = MatrixXd::Identity(2, 2);
  asym(0, 1) = 0.1;
  EXPECT_EQ(kind_of([&] { GaussianState(VectorXd::Zero(2), asym); }), ErrorKind::kInvalidArgument);
  MatrixXd sub = 0.5 * MatrixXd::Identity(2, 2);
  EXPECT_EQ(kind_of([&] { GaussianState(VectorXd::Zero(2), sub); }), ErrorKind::kUnphysicalState);
  MatrixXd ok(2, 2);
  ok << 0.25, 0.0, 0.0, 4.0;
  EXPECT_NO_THROW(GaussianState(VectorXd::Zero(2), ok));
  EXPECT_EQ(kind_of([&] { GaussianState(VectorXd::Zero(4), ok); }), ErrorKind::kInvalidArgument);
}

TEST(GaussianState, SqueezerGivesExactBlock) {
  const auto s = squeeze(vacuum(1), 0, {0.2, 5.0, 0.0});
  EXPECT_NEAR(s.cov()(0, 0), 0.2, 1e-14);
  EXPECT_NEAR(s.cov()(1, 1), 5.0, 1e-14);
  EXPECT_NEAR(s.cov()(0, 1), 0.0, 1e-14);

  // Excess anti-squeezing: still exact.
  const auto t = squeeze(vacuum(1), 0, {0.1, 20.0, 0.0});
  EXPECT_NEAR(t.cov()(0, 0), 0.1, 1e-13);
  EXPECT_NEAR(t.cov()(1, 1), 20.0, 1e-12);
  EXPECT_TRUE(is_physical(t.cov()));

  // Squeezing along pi/2 swaps the axes.
  const auto u = squeeze(vacuum(1), 0, {0.2, 5.0, kPi / 2});
  EXPECT_NEAR(u.cov()(0, 0), 5.0, 1e-12);
  EXPECT_NEAR(u.cov()(1, 1), 0.2, 1e-12);
}

TEST(GaussianState, SqueezerValidation) {
  EXPECT_EQ(kind_of([] { SqueezerSetting{0.5, 1.5, 0.0}.validate(); }),
            ErrorKind::kUnphysicalSetting);
  EXPECT_EQ(kind_of([] { SqueezerSetting{1.2, 2.0, 0.0}.validate(); }),
            ErrorKind::kInvalidArgument);
  EXPECT_EQ(kind_of([] { SqueezerSetting{0.0, 2.0, 0.0}.validate(); }),
            ErrorKind::kInvalidArgument);
  EXPECT_EQ(kind_of([] { SqueezerSetting{0.5, 0.9, 0.0}.validate(); }),
            ErrorKind::kInvalidArgument);
  EXPECT_NO_THROW((SqueezerSetting{0.5, 2.0, 0.0}.validate()));
  EXPECT_NO_THROW((SqueezerSetting{1.0, 1.0, 0.0}.validate()));
}

TEST(GaussianState, RotationMatchesHandFormula) {
  const auto s = squeeze(vacuum(1), 0, {0.3, 4.0, 0.0});
  const double phi = 0.37;
  const auto r = rotate(s, 0, phi);
  const Matrix2d expect = rot(phi) * s.mode_block(0) * rot(phi).transpose();
  EXPECT_TRUE(r.mode_block(0).isApprox(expect, 1e-14));
  // Reading X after rotating by phi: a cos^2 + b sin^2.
  EXPECT_NEAR(r.cov()(0, 0), 0.3 * std::cos(phi) * std::cos(phi) + 4.0 * std::sin(phi) * std::sin(phi),
              1e-14);
}

TEST(GaussianState, BeamsplitterProducesEntangledSigns) {
  const double vs = 0.25;
  const auto st = two_mode_squeezed(vs);
  const MatrixXd& c = st.cov();
  const double mean_var = 0.5 * (vs + 1.0 / vs);
  const double corr = 0.5 * (1.0 / vs - vs);
  EXPECT_NEAR(c(0, 0), mean_var, 1e-12);
  EXPECT_NEAR(c(1, 1), mean_var, 1e-12);
  EXPECT_NEAR(c(0, 2), -corr, 1e-12);  // X_A, X_B anticorrelated
  EXPECT_NEAR(c(1, 3), corr, 1e-12);   // P_A, P_B correlated
  EXPECT_NEAR(duan(c), 4.0 * vs, 1e-12);
  EXPECT_TRUE(is_physical(c));
}

TEST(GaussianState, BeamsplitterValidation) {
  EXPECT_EQ(kind_of([] { beamsplitter(vacuum(2), 0, 0, 0.5); }), ErrorKind::kInvalidArgument);
  EXPECT_EQ(kind_of([] { beamsplitter(vacuum(2), 0, 1, 1.5); }), ErrorKind::kInvalidArgument);
  EXPECT_EQ(kind_of([] { beamsplitter(vacuum(2), 0, 2, 0.5); }), ErrorKind::kInvalidArgument);
}

TEST(GaussianState, LossMixesInVacuum) {
  const auto s = squeeze(vacuum(1), 0, {0.2, 5.0, 0.0});
  const auto l = loss(s, 0, 0.8);
  EXPECT_NEAR(l.cov()(0, 0), 0.8 * 0.2 + 0.2, 1e-14);
  EXPECT_NEAR(l.cov()(1, 1), 0.8 * 5.0 + 0.2, 1e-14);
  const auto gone = loss(s, 0, 0.0);
  EXPECT_TRUE(gone.cov().isApprox(MatrixXd::Identity(2, 2), 1e-14));
  EXPECT_TRUE(loss(s, 0, 1.0).cov().isApprox(s.cov(), 1e-15));
  EXPECT_EQ(kind_of([&] { loss(s, 0, 1.01); }), ErrorKind::kInvalidArgument);
  EXPECT_EQ(kind_of([&] { loss(s, 0, -0.1); }), ErrorKind::kInvalidArgument);
}

TEST(GaussianState, LossOnOneArmScalesCrossBlock) {
  const auto st = two_mode_squeezed(0.1);
  const auto l = loss(st, 0, 0.64);
  EXPECT_NEAR(l.cov()(0, 2), 0.8 * st.cov()(0, 2), 1e-12);
  EXPECT_NEAR(l.cov()(2, 2), st.cov()(2, 2), 1e-15);
}

TEST(GaussianState, PhaseJitterMatchesClosedForm) {
  const auto st = two_mode_squeezed(0.1);
  const double sigma = 0.05;
  const auto j = apply_phase_jitter(st, 0, sigma);
  const Matrix2d a = st.mode_block(0);
  // E[cos^2] = (1 + e^{-2 s^2}) / 2, E[sin^2] = (1 - e^{-2 s^2}) / 2, E[cos sin] = 0.
  const double c2 = 0.5 * (1.0 + std::exp(-2.0 * sigma * sigma));
  const double s2 = 1.0 - c2;
  Matrix2d expect_block;
  expect_block << c2 * a(0, 0) + s2 * a(1, 1), (c2 - s2) * a(0, 1),
      (c2 - s2) * a(0, 1), s2 * a(0, 0) + c2 * a(1, 1);
  EXPECT_TRUE(j.mode_block(0).isApprox(expect_block, 1e-12));
  // Cross block picks up <R> = e^{-s^2/2} * I.
  const Matrix2d cross = st.cov().block<2, 2>(0, 2);
  EXPECT_TRUE((j.cov().block<2, 2>(0, 2).isApprox(std::exp(-0.5 * sigma * sigma) * cross, 1e-12)));
  EXPECT_TRUE(j.mode_block(1).isApprox(st.mode_block(1), 1e-15));
}

TEST(GaussianState, PhaseJitterMatchesMonteCarlo) {
  const auto st = two_mode_squeezed(0.2);
  const double sigma = 0.3;
  std::mt19937_64 rng(42);
  std::normal_distribution<double> normal(0.0, sigma);
  MatrixXd mc = MatrixXd::Zero(4, 4);
  const int n = 200000;
  for (int k = 0; k < n; ++k) mc += rotate(st, 1, normal(rng)).cov();
  mc /= n;
  const auto j = apply_phase_jitter(st, 1, sigma);
  // Per-draw spread of the entries is below the mode variances; 6 sigma.
  const double tol = 6.0 * 5.0 / std::sqrt(static_cast<double>(n));
  EXPECT_LT((j.cov() - mc).cwiseAbs().maxCoeff(), tol);
}

TEST(GaussianState, ZeroJitterIsIdentity) {
  const auto st = two_mode_squeezed(0.3);
  EXPECT_EQ(apply_phase_jitter(st, 0, 0.0).cov(), st.cov());
  EXPECT_EQ(kind_of([&] { apply_phase_jitter(st, 0, -0.1); }), ErrorKind::kInvalidArgument);
}

TEST(GaussianState, PhaseAverageOfTwoPointDistribution) {
  const auto st = two_mode_squeezed(0.2);
  const double phases[] = {-0.2, 0.5};
  const auto m = PhaseMoments::from_samples(phases, 2);
  const auto avg = apply_phase_average(st, 0, m);
  const MatrixXd expect = 0.5 * (rotate(st, 0, -0.2).cov() + rotate(st, 0, 0.5).cov());
  EXPECT_TRUE(avg.cov().isApprox(expect, 1e-13));
}

TEST(GaussianState, BuildExperimentJitterOverloadsAgree) {
  ExperimentSetup setup;
  setup.source_a = {0.1, 12.0, 0.0};
  setup.source_b = {0.15, 9.0, 0.0};
  setup.budget.arm_a = {{"x", 0.9}};
  setup.budget.arm_b = {{"y", 0.85}};
  const auto plain = build_experiment(setup);
  EXPECT_EQ(build_experiment(setup, PhaseJitter{}).cov(), plain.cov());
  const PhaseMoments ideal;
  EXPECT_TRUE(build_experiment(setup, ideal, ideal, ideal).cov().isApprox(plain.cov(), 1e-15));

  // Gaussian moments reproduce the Gaussian jitter path.
  const double s = 0.02;
  PhaseMoments g{std::exp(-s * s / 2), 0.0, std::exp(-2 * s * s), 0.0};
  const auto a = build_experiment(setup, PhaseJitter{s, s, s});
  const auto b = build_experiment(setup, g, g, g);
  EXPECT_TRUE(a.cov().isApprox(b.cov(), 1e-12));
}

TEST(GaussianState, BuildExperimentRejectsBadBudget) {
  ExperimentSetup setup;
  setup.budget.arm_a = {{"bad", 1.2}};
  EXPECT_THROW(build_experiment(setup), Error);
  setup.budget.arm_a = {};
  setup.source_a = {0.5, 1.5, 0.0};
  EXPECT_EQ(kind_of([&] { build_experiment(setup); }), ErrorKind::kUnphysicalSetting);
}

// Property: random chains of squeezers, rotations, splitters, losses and
// jitter never leave the physical set.
TEST(GaussianState, RandomChainsStayPhysical) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 2000; ++trial) {
    GaussianState st = vacuum(2);
    for (int op = 0; op < 8; ++op) {
      const std::size_t m = u(rng) < 0.5 ? 0 : 1;
      switch (static_cast<int>(u(rng) * 5)) {
        case 0: {
          const double vs = 0.02 + 0.98 * u(rng);
          const double va = (1.0 / vs) * (1.0 + 2.0 * u(rng));
          st = squeeze(st, m, {vs, va, 2 * kPi * u(rng)});
          break;
        }
        case 1: st = rotate(st, m, 2 * kPi * u(rng)); break;
        case 2: st = beamsplitter(st, 0, 1, u(rng)); break;
        case 3: st = loss(st, m, u(rng)); break;
        default: st = apply_phase_jitter(st, m, 0.5 * u(rng)); break;
      }
    }
    ASSERT_TRUE(is_physical(st.cov())) << "trial " << trial;
  }
}

// Symplectic eigenvalues are invariant under passive operations.
TEST(GaussianState, PassiveOperationsPreserveSymplecticSpectrum) {
  ExperimentSetup setup;
  setup.source_a = {0.1, 15.0, 0.0};
  setup.source_b = {0.2, 7.0, 0.3};
  const auto st = build_experiment(setup);
  const VectorXd before = symplectic_eigenvalues(st.cov());
  const auto after = beamsplitter(rotate(st, 1, 0.7), 0, 1, 0.3);
  EXPECT_TRUE(symplectic_eigenvalues(after.cov()).isApprox(before, 1e-10));
}

TEST(QuadratureRules, GaussHermiteIntegratesEvenMoments) {
  const auto rule = gauss_hermite(21);
  ASSERT_EQ(rule.nodes.size(), 21u);
  // int x^{2k} e^{-x^2} dx = Gamma(k + 1/2), exact up to degree 41.
  for (int k = 0; k <= 20; ++k) {
    double sum = 0.0;
    for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
      sum += rule.weights[i] * std::pow(rule.nodes[i], 2 * k);
    }
    EXPECT_NEAR(sum / std::tgamma(k + 0.5), 1.0, 1e-9) << "k=" << k;
  }
}

TEST(QuadratureRules, ExpectationRuleGivesGaussianMoments) {
  const double sigma = 0.4;
  const auto rule = gaussian_expectation_rule(21, sigma);
  double w = 0.0, c = 0.0, c2 = 0.0;
  for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
    w += rule.weights[i];
    c += rule.weights[i] * std::cos(rule.nodes[i]);
    c2 += rule.weights[i] * std::cos(2 * rule.nodes[i]);
  }
  EXPECT_NEAR(w, 1.0, 1e-13);
  EXPECT_NEAR(c, std::exp(-sigma * sigma / 2), 1e-12);
  EXPECT_NEAR(c2, std::exp(-2 * sigma * sigma), 1e-12);
  EXPECT_THROW(gauss_hermite(0), Error);
}

}  // namespace
}  // namespace tmsv
