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

#include "tmsv/sample_stats.hpp"

#include <algorithm>

#include "tmsv/error.hpp"

namespace tmsv {
namespace {

void require_length(std::span<const double> x, std::size_t n) {
  if (x.size() < n) {
    throw Error(ErrorKind::kInvalidArgument, "not enough samples for the statistic");
  }
}

}  // namespace

double sample_mean(std::span<const double> x) {
  require_length(x, 1);
  double sum = 0.0;
  for (double v : x) sum += v;
  return sum / static_cast<double>(x.size());
}

double sample_variance(std::span<const double> x) {
  return sample_covariance(x, x);
}

double sample_covariance(std::span<const double> x, std::span<const double> y) {
  require_length(x, 2);
  if (x.size() != y.size()) {
    throw Error(ErrorKind::kInvalidArgument, "covariance needs equally long series");
  }
  const double mx = sample_mean(x);
  const double my = sample_mean(y);
  double acc = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) acc += (x[i] - mx) * (y[i] - my);
  return acc / static_cast<double>(x.size() - 1);
}

std::vector<double> autocorrelation(std::span<const double> x, std::size_t max_lag) {
  require_length(x, 2);
  const std::size_t n = x.size();
  max_lag = std::min(max_lag, n - 1);
  const double m = sample_mean(x);
  std::vector<double> centered(n);
  for (std::size_t i = 0; i < n; ++i) centered[i] = x[i] - m;
  std::vector<double> rho(max_lag + 1, 0.0);
  double c0 = 0.0;
  for (double v : centered) c0 += v * v;
  if (c0 == 0.0) {
    rho[0] = 1.0;
    return rho;
  }
  for (std::size_t lag = 0; lag <= max_lag; ++lag) {
    double acc = 0.0;
    for (std::size_t i = lag; i < n; ++i) acc += centered[i] * centered[i - lag];
    rho[lag] = acc / c0;
  }
  return rho;
}

double effective_sample_size(std::span<const double> x, std::size_t max_lag) {
  const std::vector<double> rho = autocorrelation(x, max_lag);
  double sum = 1.0;
  for (std::size_t k = 1; k < rho.size(); ++k) sum += 2.0 * rho[k] * rho[k];
  return static_cast<double>(x.size()) / sum;
}

}  // namespace tmsv
