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

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <string_view>
#include <vector>

#include "tmsv/metrics.hpp"

namespace tmsv {

enum class Statistic { kDuan, kEprReidAB, kEprReidBA, kVarianceXSum, kVariancePDiff };

std::string_view to_string(Statistic s);
/// Accepts the names printed by to_string ("duan", "epr_reid_AB", ...).
Statistic statistic_from_string(std::string_view name);

enum class Resampling {
  kIid,    // individual points with replacement
  kBlock,  // contiguous circular blocks, for sensitivity checks
};

struct BootstrapConfig {
  std::size_t n_chunks = 1000;
  std::size_t chunk_len = 20000;
  std::uint64_t seed = 1;
  Statistic statistic = Statistic::kDuan;
  Resampling resampling = Resampling::kIid;
  std::size_t block_len = 64;
  unsigned n_threads = 0;  // 0: hardware concurrency
  std::size_t histogram_bins = 0;  // 0: Freedman-Diaconis

  void validate() const;
};

struct Histogram {
  std::vector<double> bin_edges;
  std::vector<std::size_t> counts;

  std::size_t total() const;
  double bin_center(std::size_t i) const { return 0.5 * (bin_edges[i] + bin_edges[i + 1]); }
};

/// Freedman-Diaconis binning (Sturges when the IQR vanishes) unless an
/// explicit bin count is given. Equal values throw degenerate-distribution.
Histogram make_histogram(std::span<const double> values, std::size_t bins = 0);

struct GaussianFit {
  double mean = 0.0;
  double sigma = 0.0;
  double amplitude = 0.0;
  double residual = 0.0;  // 0.5 * sum of squared count residuals
  int iterations = 0;
};

/// Least-squares fit of a exp(-(x - mu)^2 / (2 sigma^2)) to the bin centers
/// and counts, initialized from the histogram moments. Fewer than five
/// nonempty bins or non-convergence throw FitFailure carrying the moments.
GaussianFit gaussian_fit(const Histogram& histogram);

struct BootstrapResult {
  std::vector<double> values;
  double fit_mean = 0.0;
  double fit_sigma = 0.0;
  double fit_amplitude = 0.0;
  bool fit_fallback = false;  // the fit failed and moments were used
  double sample_mean = 0.0;
  double sample_sigma = 0.0;
  Histogram histogram;
  /// Chunks whose statistic was undefined (e.g. zero conditioning variance).
  std::size_t excluded_chunks = 0;
};

/// Resampled criterion statistic over the (X,X) and (P,P) records; the
/// other settings carry no information for these statistics. Each chunk
/// draws chunk_len points from each record with its own derived seed, so the
/// result is independent of thread count and scheduling.
BootstrapResult bootstrap(std::span<const QuadratureSettingRecord> records,
                          const BootstrapConfig& config);

/// Several statistics evaluated on the same resampled chunks (one pass over
/// the data); config.statistic is ignored. Results follow `statistics`.
std::vector<BootstrapResult> bootstrap_statistics(std::span<const QuadratureSettingRecord> records,
                                                  const BootstrapConfig& config,
                                                  std::span<const Statistic> statistics);

/// Generic resampling of a scalar statistic of one series.
std::vector<double> bootstrap_values(std::span<const double> data, const BootstrapConfig& config,
                                     const std::function<double(std::span<const double>)>& stat);

/// "bin_center,count,fit_value"
void write_histogram_csv(std::ostream& out, const BootstrapResult& result);

}  // namespace tmsv
