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

#include "tmsv/error.hpp"

#include <fmt/format.h>

namespace tmsv {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kInvalidArgument: return "invalid-argument";
    case ErrorKind::kUnphysicalSetting: return "unphysical-setting";
    case ErrorKind::kUnphysicalState: return "unphysical-state";
    case ErrorKind::kDegenerateInput: return "degenerate-input";
    case ErrorKind::kIncompleteTomography: return "incomplete-tomography";
    case ErrorKind::kFactorizationFailure: return "factorization-failure";
    case ErrorKind::kDesignFailure: return "design-failure";
    case ErrorKind::kCalibrationFailure: return "calibration-failure";
    case ErrorKind::kFitFailure: return "fit-failure";
    case ErrorKind::kDegenerateDistribution: return "degenerate-distribution";
    case ErrorKind::kConfigError: return "config-error";
    case ErrorKind::kIoError: return "io-error";
  }
  return "unknown";
}

Error::Error(ErrorKind kind, const std::string& message)
    : std::runtime_error(fmt::format("{}: {}", to_string(kind), message)),
      kind_(kind) {}

DesignFailure::DesignFailure(const std::string& message, int required_taps)
    : Error(ErrorKind::kDesignFailure, message), required_taps_(required_taps) {}

FitFailure::FitFailure(const std::string& message, double fallback_mean,
                       double fallback_sigma, double fallback_amplitude)
    : Error(ErrorKind::kFitFailure, message),
      mean_(fallback_mean),
      sigma_(fallback_sigma),
      amplitude_(fallback_amplitude) {}

}  // namespace tmsv
