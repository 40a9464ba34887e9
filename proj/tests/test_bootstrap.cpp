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

#include "tmsv/bootstrap.hpp"
#include "tmsv/error.hpp"
#include "tmsv/gaussian_state.hpp"
#include "tmsv/sample_stats.hpp"
#include "test_util.hpp"

namespace tmsv {
namespace {

using testing::kind_of;
using Eigen::Matrix4d;

std::vector<double> normals(std::size_t n, std::uint64_t seed, double mean = 0.0, double sd = 1.0) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> d(mean, sd);
  std::vector<double> v(n);
  for (double& x : v) x = d(rng);
  return v;
}

// X,X and P,P records drawn independently from `cov`.
std::vector<QuadratureSettingRecord> gaussian_records(const Matrix4d& cov, std::size_t n,
                                                     std::uint64_t seed) {
  const Matrix4d l = Eigen::LLT<Matrix4d>(cov).matrixL();
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  std::vector<QuadratureSettingRecord> out(2);
  out[0].setting_a = out[0].setting_b = Quadrature::kX;
  out[1].setting_a = out[1].setting_b = Quadrature::kP;
  for (auto& rec : out) {
    const int ia = rec.setting_a == Quadrature::kX ? 0 : 1;
    for (std::size_t k = 0; k < n; ++k) {
      Eigen::Vector4d z;
      for (int i = 0; i < 4; ++i) z(i) = normal(rng);
      const Eigen::Vector4d v = l * z;
      rec.samples_a.push_back(v(ia));
      rec.samples_b.push_back(v(ia + 2));
    }
  }
  return out;
}

Matrix4d tmsv_cov(double vs) {
  return build_experiment({vs, 1 / vs, 0}, {vs, 1 / vs, 0}, 1.5707963267948966, {}).cov();
}

TEST(Histogram, CountsSumAndEdges) {
  const auto v = normals(10000, 1);
  const auto h = make_histogram(v);
  EXPECT_EQ(h.total(), v.size());
  EXPECT_EQ(h.bin_edges.size(), h.counts.size() + 1);
  EXPECT_GT(h.counts.size(), 20u);
  const auto fixed = make_histogram(v, 50);
  EXPECT_EQ(fixed.counts.size(), 50u);
  EXPECT_EQ(fixed.total(), v.size());
}

TEST(Histogram, ConstantDataIsDegenerate) {
  const std::vector<double> v(100, 0.36);
  EXPECT_EQ(kind_of([&] { make_histogram(v); }), ErrorKind::kDegenerateDistribution);
}

TEST(GaussianFit, RecoversStandardNormal) {
  const auto v = normals(100000, 2);
  const auto fit = gaussian_fit(make_histogram(v, 50));
  EXPECT_NEAR(fit.mean, 0.0, 0.02);
  EXPECT_NEAR(fit.sigma, 1.0, 0.02);
  EXPECT_GT(fit.amplitude, 0.0);
}

TEST(GaussianFit, SingleBinFailsWithFallback) {
  Histogram h;
  h.bin_edges = {0.0, 1.0};
  h.counts = {10};
  try {
    gaussian_fit(h);
    FAIL() << "expected FitFailure";
  } catch (const FitFailure& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kFitFailure);
    EXPECT_DOUBLE_EQ(e.fallback_mean(), 0.5);
  }
}

TEST(GaussianFit, SymmetricHistogramCentersOnAxis) {
  Histogram h;
  const std::vector<std::size_t> counts = {1, 4, 11, 25, 40, 46, 40, 25, 11, 4, 1};
  for (std::size_t i = 0; i <= counts.size(); ++i) h.bin_edges.push_back(2.0 + 0.1 * static_cast<double>(i));
  h.counts = counts;
  const auto fit = gaussian_fit(h);
  EXPECT_NEAR(fit.mean, h.bin_center(5), 0.1 / 10);
}

TEST(Bootstrap, ConstantDatasetIsDegenerate) {
  std::vector<QuadratureSettingRecord> recs(2);
  recs[0].setting_a = recs[0].setting_b = Quadrature::kX;
  recs[1].setting_a = recs[1].setting_b = Quadrature::kP;
  for (auto& r : recs) {
    r.samples_a.assign(1000, 1.0);
    r.samples_b.assign(1000, 1.0);
  }
  BootstrapConfig c;
  c.n_chunks = 50;
  c.chunk_len = 100;
  c.statistic = Statistic::kVarianceXSum;
  EXPECT_EQ(kind_of([&] { bootstrap(recs, c); }), ErrorKind::kDegenerateDistribution);
  // Zero conditioning variance: every EPR chunk is undefined.
  c.statistic = Statistic::kEprReidAB;
  EXPECT_EQ(kind_of([&] { bootstrap(recs, c); }), ErrorKind::kDegenerateDistribution);
}

TEST(Bootstrap, UndefinedChunksAreExcludedAndCounted) {
  auto recs = gaussian_records(tmsv_cov(0.5), 2000, 3);
  // B's X samples constant except for two points: most chunks miss both.
  for (auto& v : recs[0].samples_b) v = 0.0;
  recs[0].samples_b[0] = 1.0;
  recs[0].samples_b[1] = -1.0;
  BootstrapConfig c;
  c.n_chunks = 400;
  c.chunk_len = 100;
  c.statistic = Statistic::kEprReidAB;
  const auto r = bootstrap(recs, c);
  EXPECT_GT(r.excluded_chunks, 0u);
  EXPECT_EQ(r.values.size() + r.excluded_chunks, c.n_chunks);
  EXPECT_EQ(r.histogram.total(), r.values.size());
}

TEST(Bootstrap, DeterministicAndThreadIndependent) {
  const auto recs = gaussian_records(tmsv_cov(0.3), 20000, 4);
  BootstrapConfig c;
  c.n_chunks = 300;
  c.chunk_len = 2000;
  c.n_threads = 1;
  const auto a = bootstrap(recs, c);
  c.n_threads = 7;
  const auto b = bootstrap(recs, c);
  EXPECT_EQ(a.values, b.values);
  EXPECT_EQ(a.fit_mean, b.fit_mean);
  c.seed = 2;
  EXPECT_NE(bootstrap(recs, c).values, a.values);
}

TEST(Bootstrap, MultiStatisticPassMatchesSingleRuns) {
  const auto recs = gaussian_records(tmsv_cov(0.3), 20000, 5);
  BootstrapConfig c;
  c.n_chunks = 100;
  c.chunk_len = 1000;
  const Statistic stats[] = {Statistic::kDuan, Statistic::kEprReidBA};
  const auto both = bootstrap_statistics(recs, c, stats);
  c.statistic = Statistic::kEprReidBA;
  EXPECT_EQ(both[1].values, bootstrap(recs, c).values);
  c.statistic = Statistic::kDuan;
  EXPECT_EQ(both[0].values, bootstrap(recs, c).values);
}

TEST(Bootstrap, DuanMeanMatchesModel) {
  const double vs = 0.09;
  const auto recs = gaussian_records(tmsv_cov(vs), 100000, 6);
  BootstrapConfig c;
  c.n_chunks = 1000;
  c.chunk_len = 20000;
  const auto r = bootstrap(recs, c);
  // Point estimate error dominates: each variance term has sd v sqrt(2 / N).
  const double se = 2 * vs * std::sqrt(2.0 / 100000) * std::sqrt(2.0);
  EXPECT_NEAR(r.fit_mean, 4 * vs, 3 * se);
  EXPECT_FALSE(r.fit_fallback);
  // Resampled spread: sqrt(2) * 2 vs * sqrt(2 / chunk_len).
  EXPECT_NEAR(r.fit_sigma / (se * std::sqrt(100000.0 / 20000.0)), 1.0, 0.1);
}

TEST(Bootstrap, FitAgreesWithSampleMoments) {
  const auto recs = gaussian_records(tmsv_cov(0.2), 50000, 7);
  BootstrapConfig c;
  c.n_chunks = 2000;
  c.chunk_len = 5000;
  const auto r = bootstrap(recs, c);
  const double tol = 3 * r.sample_sigma / std::sqrt(static_cast<double>(c.n_chunks));
  EXPECT_NEAR(r.fit_mean, r.sample_mean, tol);
  EXPECT_NEAR(r.fit_sigma, r.sample_sigma, tol);
}

TEST(Bootstrap, MeanStandardErrorMatchesAnalytic) {
  const auto data = normals(50000, 8, 3.0, 2.0);
  BootstrapConfig c;
  c.n_chunks = 2000;
  c.chunk_len = 1000;
  const auto v = bootstrap_values(data, c, [](std::span<const double> x) { return sample_mean(x); });
  const double analytic = std::sqrt(sample_variance(data) / static_cast<double>(c.chunk_len));
  EXPECT_NEAR(std::sqrt(sample_variance(v)) / analytic, 1.0, 0.10);
}

TEST(Bootstrap, SigmaScalesAsInverseRootChunkLength) {
  const auto recs = gaussian_records(tmsv_cov(0.3), 200000, 9);
  BootstrapConfig c;
  c.n_chunks = 1000;
  double ref = 0.0;
  for (std::size_t len : {1000u, 10000u, 100000u}) {
    c.chunk_len = len;
    const double scaled = bootstrap(recs, c).fit_sigma * std::sqrt(static_cast<double>(len));
    if (ref == 0.0) ref = scaled;
    EXPECT_NEAR(scaled / ref, 1.0, 0.2) << len;
  }
}

TEST(Bootstrap, BlockResamplingRuns) {
  const auto recs = gaussian_records(tmsv_cov(0.3), 10000, 10);
  BootstrapConfig c;
  c.n_chunks = 200;
  c.chunk_len = 2000;
  c.resampling = Resampling::kBlock;
  c.block_len = 50;
  const auto r = bootstrap(recs, c);
  EXPECT_NEAR(r.sample_mean, 1.2, 0.1);
}

TEST(Bootstrap, ConfigAndInputValidation) {
  const auto recs = gaussian_records(tmsv_cov(0.3), 100, 11);
  BootstrapConfig c;
  c.chunk_len = 1000;
  EXPECT_EQ(kind_of([&] { bootstrap(recs, c); }), ErrorKind::kInvalidArgument);
  c.chunk_len = 50;
  c.n_chunks = 1;
  EXPECT_EQ(kind_of([&] { bootstrap(recs, c); }), ErrorKind::kInvalidArgument);
  c.n_chunks = 10;
  const std::vector<QuadratureSettingRecord> only_xx(recs.begin(), recs.begin() + 1);
  EXPECT_EQ(kind_of([&] { bootstrap(only_xx, c); }), ErrorKind::kIncompleteTomography);
}

TEST(Bootstrap, StatisticNames) {
  for (auto s : {Statistic::kDuan, Statistic::kEprReidAB, Statistic::kEprReidBA,
                 Statistic::kVarianceXSum, Statistic::kVariancePDiff}) {
    EXPECT_EQ(statistic_from_string(to_string(s)), s);
  }
  EXPECT_EQ(to_string(Statistic::kEprReidAB), "epr_reid_AB");
  EXPECT_EQ(kind_of([] { statistic_from_string("nope"); }), ErrorKind::kInvalidArgument);
}

TEST(Bootstrap, HistogramCsv) {
  const auto recs = gaussian_records(tmsv_cov(0.3), 5000, 12);
  BootstrapConfig c;
  c.n_chunks = 200;
  c.chunk_len = 1000;
  c.histogram_bins = 12;
  const auto r = bootstrap(recs, c);
  std::ostringstream os;
  write_histogram_csv(os, r);
  std::istringstream is(os.str());
  std::string line;
  std::getline(is, line);
  EXPECT_EQ(line, "bin_center,count,fit_value");
  int rows = 0;
  while (std::getline(is, line)) ++rows;
  EXPECT_EQ(rows, 12);
}

}  // namespace
}  // namespace tmsv
