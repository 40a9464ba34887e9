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
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "tmsv/error.hpp"
#include "tmsv/gaussian_state.hpp"
#include "tmsv/metrics.hpp"
#include "tmsv/sample_stats.hpp"
#include "test_util.hpp"

namespace tmsv {
namespace {

using testing::kind_of;
using Eigen::Matrix4d;

const std::filesystem::path kFixtures = TMSV_FIXTURE_DIR;

PartialCovariance fixture_matrix() {
  return read_partial_covariance(kFixtures / "measured_covariance.txt");
}

// Independent Gaussian draws with covariance `cov`, as four setting records.
std::vector<QuadratureSettingRecord> draw_records(const Matrix4d& cov, std::size_t n,
                                                 std::uint64_t seed) {
  const Eigen::LLT<Matrix4d> llt(cov);
  const Matrix4d l = llt.matrixL();
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  std::vector<QuadratureSettingRecord> out;
  for (Quadrature qa : {Quadrature::kX, Quadrature::kP}) {
    for (Quadrature qb : {Quadrature::kX, Quadrature::kP}) {
      QuadratureSettingRecord rec;
      rec.setting_a = qa;
      rec.setting_b = qb;
      const int ia = qa == Quadrature::kX ? idx::kXa : idx::kPa;
      const int ib = qb == Quadrature::kX ? idx::kXb : idx::kPb;
      for (std::size_t k = 0; k < n; ++k) {
        Eigen::Vector4d z;
        for (int i = 0; i < 4; ++i) z(i) = normal(rng);
        const Eigen::Vector4d v = l * z;
        rec.samples_a.push_back(v(ia));
        rec.samples_b.push_back(v(ib));
      }
      out.push_back(std::move(rec));
    }
  }
  return out;
}

TEST(Metrics, GoldenDuanFromFixtureMatrix) {
  const auto pc = fixture_matrix();
  // (21.813 + 21.801 - 2 * 21.725) + (25.750 + 26.685 - 2 * 26.120)
  EXPECT_NEAR(variance_x_sum(pc.cov), 0.164, 1e-12);
  EXPECT_NEAR(variance_p_diff(pc.cov), 0.195, 1e-12);
  EXPECT_NEAR(duan(pc.cov), 0.359, 1e-12);
}

TEST(Metrics, GoldenEprReidFromFixtureMatrix) {
  const auto pc = fixture_matrix();
  const double cond_x = 21.813 - 21.725 * 21.725 / 21.801;
  const double cond_p = 25.750 - 26.120 * 26.120 / 26.685;
  const auto ab = epr_reid(pc.cov, InferenceDirection::kAFromB);
  EXPECT_NEAR(ab.product, cond_x * cond_p, 1e-12);
  EXPECT_NEAR(ab.product, 0.0300, 5e-4);
  EXPECT_NEAR(ab.g, -21.725 / 21.801, 1e-12);
  EXPECT_NEAR(ab.h, 26.120 / 26.685, 1e-12);
  // The reported raw-data value 0.0309 is within 3.5% of the matrix value.
  EXPECT_LT(std::abs(0.0309 / ab.product - 1.0), 0.035);
  const auto ba = epr_reid(pc.cov, InferenceDirection::kBFromA);
  EXPECT_LT(std::abs(ba.product / ab.product - 1.0), 0.10);
}

TEST(Metrics, DbConversions) {
  EXPECT_NEAR(to_db(0.360, 4.0), 10.458, 1e-3);
  EXPECT_NEAR(to_db(4.0, 4.0), 0.0, 1e-15);
  EXPECT_NEAR(from_db(to_db(0.0309, 1.0), 1.0), 0.0309, 1e-15);
  EXPECT_EQ(kind_of([] { to_db(0.0, 4.0); }), ErrorKind::kInvalidArgument);
  EXPECT_EQ(kind_of([] { to_db(-1.0, 4.0); }), ErrorKind::kInvalidArgument);
}

TEST(Metrics, VacuumSitsOnTheBounds) {
  const Matrix4d v = Matrix4d::Identity();
  EXPECT_DOUBLE_EQ(duan(v), kDuanCritical);
  EXPECT_DOUBLE_EQ(epr_reid(v, InferenceDirection::kAFromB).product, kEprReidCritical);
  const auto c = evaluate_criteria(v);
  EXPECT_FALSE(c.inseparable());
  EXPECT_FALSE(c.epr_paradox());
}

TEST(Metrics, TwoModeSqueezedClosedForms) {
  const double vs = 0.09;
  const auto st = build_experiment({vs, 1 / vs, 0}, {vs, 1 / vs, 0}, 1.5707963267948966, {});
  const Matrix4d c = st.cov();
  EXPECT_NEAR(duan(c), 4 * vs, 1e-12);
  // Pure TMSV: conditional variance V - C^2 / V = 1 / V per quadrature.
  const double cond = 2.0 / (vs + 1 / vs);
  EXPECT_NEAR(epr_reid(c, InferenceDirection::kAFromB).product, cond * cond, 1e-12);
  const auto crit = evaluate_criteria(c);
  EXPECT_TRUE(crit.inseparable());
  EXPECT_TRUE(crit.epr_paradox());
}

TEST(Metrics, DegenerateConditioningVariance) {
  Matrix4d c = Matrix4d::Identity();
  c(idx::kXb, idx::kXb) = 0.0;
  EXPECT_EQ(kind_of([&] { epr_reid(c, InferenceDirection::kAFromB); }),
            ErrorKind::kDegenerateInput);
  Matrix4d asym = Matrix4d::Identity();
  asym(0, 2) = 0.5;
  EXPECT_EQ(kind_of([&] { duan(asym); }), ErrorKind::kInvalidArgument);
}

// Property: the closed-form gains minimize the conditional product.
TEST(Metrics, EprGainsAreOptimal) {
  const auto pc = fixture_matrix();
  for (auto dir : {InferenceDirection::kAFromB, InferenceDirection::kBFromA}) {
    const auto r = epr_reid(pc.cov, dir);
    EXPECT_NEAR(epr_reid_product_at(pc.cov, dir, r.g, r.h), r.product, 1e-12);
    for (double dg : {-0.01, -0.001, 0.001, 0.01}) {
      EXPECT_GT(epr_reid_product_at(pc.cov, dir, r.g + dg, r.h), r.product);
      EXPECT_GT(epr_reid_product_at(pc.cov, dir, r.g, r.h + dg), r.product);
    }
  }
}

TEST(Metrics, FixtureParsing) {
  const auto pc = fixture_matrix();
  EXPECT_EQ(pc.measured_count(), 12);
  EXPECT_FALSE(pc.measured(idx::kXa, idx::kPa));
  EXPECT_FALSE(pc.measured(idx::kXb, idx::kPb));
  EXPECT_TRUE(pc.measured(idx::kXa, idx::kPb));
  EXPECT_DOUBLE_EQ(pc.cov(idx::kXa, idx::kPa), 0.0);
  EXPECT_DOUBLE_EQ(pc.cov(idx::kPa, idx::kXb), -0.140);
}

TEST(Metrics, PartialCovarianceRoundTrip) {
  const auto pc = fixture_matrix();
  std::stringstream ss;
  write_partial_covariance(ss, pc);
  const auto back = parse_partial_covariance(ss);
  EXPECT_TRUE(back.cov.isApprox(pc.cov, 1e-12));
  EXPECT_EQ(back.measured, pc.measured);
}

TEST(Metrics, ParserRejectsMalformedInput) {
  auto parse = [](const std::string& text) {
    std::istringstream in(text);
    return parse_partial_covariance(in);
  };
  EXPECT_EQ(kind_of([&] { parse("1 0 0 0\n0 1 0 0\n0 0 1 0\n"); }), ErrorKind::kInvalidArgument);
  EXPECT_EQ(kind_of([&] { parse("1 0 0\n0 1 0 0\n0 0 1 0\n0 0 0 1\n"); }),
            ErrorKind::kInvalidArgument);
  EXPECT_EQ(kind_of([&] { parse("1 x 0 0\n0 1 0 0\n0 0 1 0\n0 0 0 1\n"); }),
            ErrorKind::kInvalidArgument);
  EXPECT_EQ(kind_of([&] { parse("1 0.5 0 0\n0 1 0 0\n0 0 1 0\n0 0 0 1\n"); }),
            ErrorKind::kInvalidArgument);
  EXPECT_EQ(kind_of([&] { parse("1 (0) 0 0\n0 1 0 0\n0 0 1 0\n0 0 0 1\n"); }),
            ErrorKind::kInvalidArgument);
  EXPECT_EQ(kind_of([] { read_partial_covariance("/nonexistent/file.txt"); }),
            ErrorKind::kIoError);
  EXPECT_NO_THROW(parse("# comment\n\n1 0 0 0\n0 1 0 0\n0 0 1 0\n0 0 0 1\n"));
}

TEST(Metrics, ReconstructionRecoversKnownCovariance) {
  ExperimentSetup setup;
  setup.source_a = {0.3, 4.0, 0.0};
  setup.source_b = {0.4, 3.0, 0.0};
  const Matrix4d truth = build_experiment(setup).cov();
  const auto records = draw_records(truth, 40000, 3);
  const auto rec = reconstruct_covariance_with_errors(records);
  EXPECT_EQ(rec.estimate.measured_count(), 12);
  for (int r = 0; r < 4; ++r) {
    for (int c = 0; c < 4; ++c) {
      if (!rec.estimate.measured(r, c)) {
        EXPECT_EQ(rec.estimate.cov(r, c), 0.0);
        continue;
      }
      EXPECT_GT(rec.standard_error(r, c), 0.0);
      EXPECT_LT(std::abs(rec.estimate.cov(r, c) - truth(r, c)), 4.0 * rec.standard_error(r, c))
          << r << "," << c;
    }
  }
  // Diagonals average two runs: their error is 1/sqrt(2) of a single run's.
  const double single = truth(0, 0) * std::sqrt(2.0 / 40000.0);
  EXPECT_NEAR(rec.standard_error(0, 0) / single, 1.0 / std::sqrt(2.0), 0.05);
}

TEST(Metrics, ReconstructionErrorsAreCalibrated) {
  // Across independent repeats the spread of an entry matches its error.
  // Records must be long against the 64-lag ESS window: every lag adds
  // ~1/N of pure noise to sum rho^2, which overstates the error at small N.
  const Matrix4d truth = build_experiment({0.5, 2.0, 0.0}, {0.5, 2.0, 0.0}, 1.5707963267948966, {}).cov();
  std::vector<double> cross, se;
  for (int k = 0; k < 200; ++k) {
    const auto rec = reconstruct_covariance_with_errors(draw_records(truth, 5000, 100 + k));
    cross.push_back(rec.estimate.cov(idx::kXa, idx::kXb));
    se.push_back(rec.standard_error(idx::kXa, idx::kXb));
  }
  const double spread = std::sqrt(sample_variance(cross));
  EXPECT_NEAR(spread / sample_mean(se), 1.0, 0.15);
}

TEST(Metrics, MissingSettingIsIncompleteTomography) {
  auto records = draw_records(Matrix4d::Identity(), 100, 1);
  records.pop_back();
  EXPECT_EQ(kind_of([&] { reconstruct_covariance(records); }),
            ErrorKind::kIncompleteTomography);
  EXPECT_EQ(kind_of([&] { criteria_from_records(records); }),
            ErrorKind::kIncompleteTomography);
}

TEST(Metrics, RecordValidation) {
  auto records = draw_records(Matrix4d::Identity(), 100, 1);
  records[1].samples_b.pop_back();
  EXPECT_EQ(kind_of([&] { reconstruct_covariance(records); }), ErrorKind::kInvalidArgument);
}

TEST(Metrics, VarianceOffsetsTouchOnlyVariances) {
  auto records = draw_records(Matrix4d::Identity(), 2000, 5);
  const auto base = reconstruct_covariance(records);
  for (auto& r : records) {
    r.variance_offset_a = 0.1;
    r.variance_offset_b = 0.2;
  }
  const auto shifted = reconstruct_covariance(records);
  EXPECT_NEAR(shifted.cov(idx::kXa, idx::kXa), base.cov(idx::kXa, idx::kXa) - 0.1, 1e-12);
  EXPECT_NEAR(shifted.cov(idx::kPb, idx::kPb), base.cov(idx::kPb, idx::kPb) - 0.2, 1e-12);
  EXPECT_DOUBLE_EQ(shifted.cov(idx::kXa, idx::kXb), base.cov(idx::kXa, idx::kXb));
}

TEST(Metrics, SameRunCriteriaMatchPerRecordMoments) {
  const Matrix4d truth = build_experiment({0.09, 1 / 0.09, 0.0}, {0.09, 1 / 0.09, 0.0}, 1.5707963267948966, {}).cov();
  const auto records = draw_records(truth, 20000, 9);
  const auto c = criteria_from_records(records);
  const auto& xx = records[0];
  const auto& pp = records[3];
  std::vector<double> xsum, pdiff;
  for (std::size_t i = 0; i < xx.samples_a.size(); ++i) {
    xsum.push_back(xx.samples_a[i] + xx.samples_b[i]);
    pdiff.push_back(pp.samples_a[i] - pp.samples_b[i]);
  }
  EXPECT_NEAR(c.var_x_sum, sample_variance(xsum), 1e-9);
  EXPECT_NEAR(c.var_p_diff, sample_variance(pdiff), 1e-9);
  EXPECT_NEAR(c.duan, c.var_x_sum + c.var_p_diff, 1e-12);
  EXPECT_NEAR(c.duan, 4 * 0.09, 0.02);
}

}  // namespace
}  // namespace tmsv
