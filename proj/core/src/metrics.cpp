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

#include "tmsv/metrics.hpp"

#include <cmath>
#include <fstream>
#include <istream>
#include <optional>
#include <ostream>
#include <sstream>

#include <fmt/format.h>

#include "tmsv/error.hpp"
#include "tmsv/sample_stats.hpp"

namespace tmsv {
namespace {

void require_symmetric(const Eigen::Matrix4d& cov) {
  const double scale = std::max(1.0, cov.cwiseAbs().maxCoeff());
  if ((cov - cov.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) {
    throw Error(ErrorKind::kInvalidArgument, "covariance matrix is not symmetric");
  }
}

struct DirectionIndices {
  int x_target, x_cond, p_target, p_cond;
};

DirectionIndices indices_for(InferenceDirection direction) {
  if (direction == InferenceDirection::kAFromB) {
    return {idx::kXa, idx::kXb, idx::kPa, idx::kPb};
  }
  return {idx::kXb, idx::kXa, idx::kPb, idx::kPa};
}

int quadrature_index(Quadrature q, bool arm_b) {
  const int base = arm_b ? idx::kXb : idx::kXa;
  return base + (q == Quadrature::kP ? 1 : 0);
}

}  // namespace

double variance_x_sum(const Eigen::Matrix4d& cov) {
  return cov(idx::kXa, idx::kXa) + cov(idx::kXb, idx::kXb) + 2.0 * cov(idx::kXa, idx::kXb);
}

double variance_p_diff(const Eigen::Matrix4d& cov) {
  return cov(idx::kPa, idx::kPa) + cov(idx::kPb, idx::kPb) - 2.0 * cov(idx::kPa, idx::kPb);
}

double duan(const Eigen::Matrix4d& cov) {
  require_symmetric(cov);
  return variance_x_sum(cov) + variance_p_diff(cov);
}

EntanglementCriteria evaluate_criteria(const Eigen::Matrix4d& cov) {
  EntanglementCriteria c;
  c.duan = duan(cov);
  c.var_x_sum = variance_x_sum(cov);
  c.var_p_diff = variance_p_diff(cov);
  c.epr_a_from_b = epr_reid(cov, InferenceDirection::kAFromB).product;
  c.epr_b_from_a = epr_reid(cov, InferenceDirection::kBFromA).product;
  return c;
}

EprReidResult epr_reid(const Eigen::Matrix4d& cov, InferenceDirection direction) {
  require_symmetric(cov);
  const DirectionIndices d = indices_for(direction);
  const double var_xc = cov(d.x_cond, d.x_cond);
  const double var_pc = cov(d.p_cond, d.p_cond);
  if (!(var_xc > 0.0) || !(var_pc > 0.0)) {
    throw Error(ErrorKind::kDegenerateInput, "conditioning variance must be positive");
  }
  EprReidResult result;
  result.g = cov(d.x_target, d.x_cond) / var_xc;
  result.h = cov(d.p_target, d.p_cond) / var_pc;
  const double cond_x =
      cov(d.x_target, d.x_target) - cov(d.x_target, d.x_cond) * cov(d.x_target, d.x_cond) / var_xc;
  const double cond_p =
      cov(d.p_target, d.p_target) - cov(d.p_target, d.p_cond) * cov(d.p_target, d.p_cond) / var_pc;
  result.product = cond_x * cond_p;
  return result;
}

double epr_reid_product_at(const Eigen::Matrix4d& cov, InferenceDirection direction, double g,
                           double h) {
  const DirectionIndices d = indices_for(direction);
  const double vx = cov(d.x_target, d.x_target) - 2.0 * g * cov(d.x_target, d.x_cond) +
                    g * g * cov(d.x_cond, d.x_cond);
  const double vp = cov(d.p_target, d.p_target) - 2.0 * h * cov(d.p_target, d.p_cond) +
                    h * h * cov(d.p_cond, d.p_cond);
  return vx * vp;
}

double to_db(double value, double critical) {
  if (!(value > 0.0) || !(critical > 0.0)) {
    throw Error(ErrorKind::kInvalidArgument,
                fmt::format("dB conversion needs positive inputs, got {} and {}", value, critical));
  }
  return 10.0 * std::log10(critical / value);
}

double from_db(double db, double critical) {
  return critical * std::pow(10.0, -db / 10.0);
}

char to_char(Quadrature q) { return q == Quadrature::kX ? 'X' : 'P'; }

void QuadratureSettingRecord::validate() const {
  if (samples_a.size() != samples_b.size()) {
    throw Error(ErrorKind::kInvalidArgument, "record arms have different lengths");
  }
  if (samples_a.size() < 2) {
    throw Error(ErrorKind::kInvalidArgument, "record needs at least two samples");
  }
}

namespace {

std::array<const QuadratureSettingRecord*, 4> records_by_setting(
    std::span<const QuadratureSettingRecord> records) {
  std::array<const QuadratureSettingRecord*, 4> by_setting{};
  for (const auto& rec : records) {
    rec.validate();
    const int slot = (rec.setting_a == Quadrature::kP ? 2 : 0) + (rec.setting_b == Quadrature::kP ? 1 : 0);
    by_setting[slot] = &rec;
  }
  for (int slot = 0; slot < 4; ++slot) {
    if (by_setting[slot] == nullptr) {
      throw Error(ErrorKind::kIncompleteTomography,
                  fmt::format("missing quadrature setting ({},{})", slot & 2 ? 'P' : 'X',
                              slot & 1 ? 'P' : 'X'));
    }
  }

  return by_setting;
}

}  // namespace

CovarianceReconstruction reconstruct_covariance_with_errors(
    std::span<const QuadratureSettingRecord> records) {
  const auto by_setting = records_by_setting(records);
  CovarianceReconstruction out;
  Eigen::Matrix4d var_sum = Eigen::Matrix4d::Zero();   // sum of estimates
  Eigen::Matrix4d err2_sum = Eigen::Matrix4d::Zero();  // sum of squared errors
  Eigen::Matrix4d count = Eigen::Matrix4d::Zero();

  for (const auto* rec : by_setting) {
    const int ia = quadrature_index(rec->setting_a, false);
    const int ib = quadrature_index(rec->setting_b, true);
    const double ess =
        std::min(effective_sample_size(rec->samples_a), effective_sample_size(rec->samples_b));
    const double va = sample_variance(rec->samples_a);
    const double vb = sample_variance(rec->samples_b);
    const double cab = sample_covariance(rec->samples_a, rec->samples_b);

    var_sum(ia, ia) += va - rec->variance_offset_a;
    err2_sum(ia, ia) += 2.0 * va * va / ess;
    count(ia, ia) += 1.0;
    var_sum(ib, ib) += vb - rec->variance_offset_b;
    err2_sum(ib, ib) += 2.0 * vb * vb / ess;
    count(ib, ib) += 1.0;
    var_sum(ia, ib) = var_sum(ib, ia) = cab;
    err2_sum(ia, ib) = err2_sum(ib, ia) = (va * vb + cab * cab) / ess;
    count(ia, ib) = count(ib, ia) = 1.0;
  }

  for (int r = 0; r < 4; ++r) {
    for (int c = 0; c < 4; ++c) {
      if (count(r, c) == 0.0) continue;
      out.estimate.cov(r, c) = var_sum(r, c) / count(r, c);
      out.standard_error(r, c) = std::sqrt(err2_sum(r, c)) / count(r, c);
      out.estimate.measured(r, c) = true;
    }
  }
  return out;
}

EntanglementCriteria criteria_from_records(std::span<const QuadratureSettingRecord> records) {
  const auto by_setting = records_by_setting(records);
  Eigen::Matrix4d cov = Eigen::Matrix4d::Zero();
  for (const auto* rec : {by_setting[0], by_setting[3]}) {
    const int ia = quadrature_index(rec->setting_a, false);
    const int ib = quadrature_index(rec->setting_b, true);
    cov(ia, ia) = sample_variance(rec->samples_a) - rec->variance_offset_a;
    cov(ib, ib) = sample_variance(rec->samples_b) - rec->variance_offset_b;
    cov(ia, ib) = cov(ib, ia) = sample_covariance(rec->samples_a, rec->samples_b);
  }
  return evaluate_criteria(cov);
}

PartialCovariance reconstruct_covariance(std::span<const QuadratureSettingRecord> records) {
  return reconstruct_covariance_with_errors(records).estimate;
}

PartialCovariance parse_partial_covariance(std::istream& in) {
  PartialCovariance pc;
  int row = 0;
  std::string line;
  while (std::getline(in, line)) {
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    if (row >= 4) {
      throw Error(ErrorKind::kInvalidArgument, "covariance file has more than four rows");
    }
    std::istringstream tokens(line);
    std::string token;
    int col = 0;
    while (tokens >> token) {
      if (col >= 4) {
        throw Error(ErrorKind::kInvalidArgument,
                    fmt::format("covariance row {} has more than four entries", row + 1));
      }
      bool measured = true;
      if (token.size() >= 2 && token.front() == '(' && token.back() == ')') {
        measured = false;
        token = token.substr(1, token.size() - 2);
      }
      std::size_t used = 0;
      double value = 0.0;
      try {
        value = std::stod(token, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used != token.size()) {
        throw Error(ErrorKind::kInvalidArgument,
                    fmt::format("cannot parse covariance entry '{}' in row {}", token, row + 1));
      }
      pc.cov(row, col) = measured ? value : 0.0;
      pc.measured(row, col) = measured;
      ++col;
    }
    if (col != 4) {
      throw Error(ErrorKind::kInvalidArgument,
                  fmt::format("covariance row {} has {} entries, expected 4", row + 1, col));
    }
    ++row;
  }
  if (row != 4) {
    throw Error(ErrorKind::kInvalidArgument,
                fmt::format("covariance file has {} rows, expected 4", row));
  }
  require_symmetric(pc.cov);
  if (pc.measured != pc.measured.transpose()) {
    throw Error(ErrorKind::kInvalidArgument, "measured-entry mask is not symmetric");
  }
  return pc;
}

PartialCovariance read_partial_covariance(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw Error(ErrorKind::kIoError, fmt::format("cannot open '{}'", path.string()));
  }
  return parse_partial_covariance(in);
}

void write_partial_covariance(std::ostream& out, const PartialCovariance& pc) {
  out << "# X_A P_A X_B P_B, shot-noise units; (value) = not measured\n";
  for (int r = 0; r < 4; ++r) {
    for (int c = 0; c < 4; ++c) {
      const std::string v = fmt::format("{:.6g}", pc.cov(r, c));
      out << (c ? " " : "") << (pc.measured(r, c) ? v : "(" + v + ")");
    }
    out << '\n';
  }
}

}  // namespace tmsv
