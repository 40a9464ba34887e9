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
#include <vector>

namespace tmsv {

struct QuadratureRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

/// Physicists' Gauss-Hermite rule: sum_i w_i f(x_i) ~ int f(x) exp(-x^2) dx.
/// Nodes and weights come from the Golub-Welsch eigenvalue method.
QuadratureRule gauss_hermite(std::size_t order);

/// Rule for E[f(phi)] with phi ~ N(0, sigma^2); weights sum to one.
QuadratureRule gaussian_expectation_rule(std::size_t order, double sigma);

}  // namespace tmsv
