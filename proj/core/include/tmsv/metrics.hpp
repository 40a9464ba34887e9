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

// Entanglement criteria on two-mode covariance matrices ordered
// (X_A, P_A, X_B, P_B), plus reconstruction of that matrix from homodyne
// records taken at the four amplitude/phase setting combinations.

#include <array>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace tmsv {

inline constexpr double kDuanCritical = 4.0;
inline constexpr double kEprReidCritical = 1.0;

namespace idx {
inline constexpr int kXa = 0;
inline constexpr int kPa = 1;
inline constexpr int kXb = 2;
inline constexpr int kPb = 3;
}  // namespace idx

/// Var(X_A + X_B) + Var(P_A - P_B). Entangled iff below 4.
double duan(const Eigen::Matrix4d& cov);

/// Var(X_A + X_B) alone, and Var(P_A - P_B) alone.
double variance_x_sum(const Eigen::Matrix4d& cov);
double variance_p_diff(const Eigen::Matrix4d& cov);

enum class InferenceDirection {
  kAFromB,  // infer A's quadratures from B's outcomes
  kBFromA,
};

struct EprReidResult {
  double g = 0.0;
  double h = 0.0;
  double product = 0.0;
};

/// Product of the optimally conditioned variances min_g Var(X_1 - g X_2) *
/// min_h Var(P_1 - h P_2). EPR paradox demonstrated iff product < 1.
EprReidResult epr_reid(const Eigen::Matrix4d& cov, InferenceDirection direction);

/// Conditional-variance product at a given (g, h), used to probe optimality.
double epr_reid_product_at(const Eigen::Matrix4d& cov, InferenceDirection direction,
                           double g, double h);

/// All criterion values of a two-mode covariance matrix.
struct EntanglementCriteria {
  double duan = 0.0;
  double var_x_sum = 0.0;
  double var_p_diff = 0.0;
  double epr_a_from_b = 0.0;
  double epr_b_from_a = 0.0;

  bool inseparable() const { return duan < kDuanCritical; }
  bool epr_paradox() const {
    return epr_a_from_b < kEprReidCritical || epr_b_from_a < kEprReidCritical;
  }
};

EntanglementCriteria evaluate_criteria(const Eigen::Matrix4d& cov);

/// 10 log10(critical / value): positive when the value beats the bound.
double to_db(double value, double critical);
/// Inverse of to_db.
double from_db(double db, double critical);

enum class Quadrature { kX, kP };

char to_char(Quadrature q);

struct PartialCovariance {
  Eigen::Matrix4d cov = Eigen::Matrix4d::Zero();
  Eigen::Matrix<bool, 4, 4> measured = Eigen::Matrix<bool, 4, 4>::Constant(false);

  int measured_count() const { return static_cast<int>(measured.count()); }
};

/// One homodyne run with fixed quadrature settings on both arms. Samples are
/// shot-noise normalized. variance_offset_* is a noise floor (e.g. detector
/// dark noise, in the same units) to remove from the variance of that arm;
/// it does not affect covariances.
struct QuadratureSettingRecord {
  Quadrature setting_a = Quadrature::kX;
  Quadrature setting_b = Quadrature::kX;
  std::vector<double> samples_a;
  std::vector<double> samples_b;
  double variance_offset_a = 0.0;
  double variance_offset_b = 0.0;

  void validate() const;
};

/// Reconstruction together with standard errors for every measured entry.
/// Standard errors use the effective sample size of each record.
struct CovarianceReconstruction {
  PartialCovariance estimate;
  Eigen::Matrix4d standard_error = Eigen::Matrix4d::Zero();
};

/// Builds the 12 measurable entries from the (X,X), (X,P), (P,X) and (P,P)
/// records. Variances measured in two runs are averaged; the intra-mode X-P
/// covariances stay unmeasured and zero.
PartialCovariance reconstruct_covariance(std::span<const QuadratureSettingRecord> records);

CovarianceReconstruction reconstruct_covariance_with_errors(
    std::span<const QuadratureSettingRecord> records);

/// Criteria from same-run moments: X terms from the (X,X) record, P terms
/// from the (P,P) record. A-B differences of large, strongly correlated
/// variances only cancel when both come from one run, so this is the point
/// estimate to compare with bootstrap means. Throws like the reconstruction
/// on a missing setting.
EntanglementCriteria criteria_from_records(std::span<const QuadratureSettingRecord> records);

/// Plain-text matrix format: four rows of four whitespace-separated numbers
/// in (X_A, P_A, X_B, P_B) order. A value in parentheses, e.g. "(0)", marks
/// an unmeasured entry. Lines starting with '#' are comments.
PartialCovariance parse_partial_covariance(std::istream& in);
PartialCovariance read_partial_covariance(const std::filesystem::path& path);
void write_partial_covariance(std::ostream& out, const PartialCovariance& pc);

}  // namespace tmsv
