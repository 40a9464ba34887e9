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

#include <cstddef>
#include <span>
#include <vector>

namespace tmsv {

double sample_mean(std::span<const double> x);

/// Unbiased (N - 1) variance.
double sample_variance(std::span<const double> x);

/// Unbiased (N - 1) covariance of two equally long series.
double sample_covariance(std::span<const double> x, std::span<const double> y);

/// Normalized autocorrelation rho(0..max_lag) of a series.
std::vector<double> autocorrelation(std::span<const double> x, std::size_t max_lag);

inline constexpr std::size_t kDefaultCorrelationLags = 64;

/// Effective number of independent samples for second-moment statistics of
/// a stationary Gaussian series: N / sum_k rho(k)^2, summed over |k| <= max_lag.
double effective_sample_size(std::span<const double> x,
                             std::size_t max_lag = kDefaultCorrelationLags);

}  // namespace tmsv
