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

#include "tmsv/quadrature_rules.hpp"

#include <cmath>
#include <numbers>

#include <Eigen/Eigenvalues>

#include "tmsv/error.hpp"

namespace tmsv {

QuadratureRule gauss_hermite(std::size_t order) {
  if (order == 0) {
    throw Error(ErrorKind::kInvalidArgument, "quadrature order must be positive");
  }
  const auto n = static_cast<Eigen::Index>(order);
  Eigen::MatrixXd jacobi = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index k = 1; k < n; ++k) {
    const double beta = std::sqrt(static_cast<double>(k) / 2.0);
    jacobi(k, k - 1) = beta;
    jacobi(k - 1, k) = beta;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(jacobi);
  QuadratureRule rule;
  rule.nodes.resize(order);
  rule.weights.resize(order);
  const double mu0 = std::sqrt(std::numbers::pi);
  for (Eigen::Index i = 0; i < n; ++i) {
    rule.nodes[i] = solver.eigenvalues()(i);
    const double v0 = solver.eigenvectors()(0, i);
    rule.weights[i] = mu0 * v0 * v0;
  }
  return rule;
}

QuadratureRule gaussian_expectation_rule(std::size_t order, double sigma) {
  QuadratureRule rule = gauss_hermite(order);
  const double scale = std::sqrt(2.0) * sigma;
  const double norm = 1.0 / std::sqrt(std::numbers::pi);
  for (std::size_t i = 0; i < order; ++i) {
    rule.nodes[i] *= scale;
    rule.weights[i] *= norm;
  }
  return rule;
}

}  // namespace tmsv
