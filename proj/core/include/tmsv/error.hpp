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

#include <stdexcept>
#include <string>
#include <string_view>

namespace tmsv {

enum class ErrorKind {
  kInvalidArgument,
  kUnphysicalSetting,
  kUnphysicalState,
  kDegenerateInput,
  kIncompleteTomography,
  kFactorizationFailure,
  kDesignFailure,
  kCalibrationFailure,
  kFitFailure,
  kDegenerateDistribution,
  kConfigError,
  kIoError,
};

std::string_view to_string(ErrorKind kind);

/// Base exception for every failure raised by the library. The kind is the
/// machine-readable part; the message is for humans.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message);

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

/// Raised by design_lowpass when the requested tap count cannot reach the
/// stopband target. required_taps is the smallest odd count that does.
class DesignFailure : public Error {
 public:
  DesignFailure(const std::string& message, int required_taps);

  int required_taps() const noexcept { return required_taps_; }

 private:
  int required_taps_;
};

/// Raised by gaussian_fit. Carries moment-based estimates so callers can
/// still report something when the least-squares fit does not converge.
class FitFailure : public Error {
 public:
  FitFailure(const std::string& message, double fallback_mean,
             double fallback_sigma, double fallback_amplitude);

  double fallback_mean() const noexcept { return mean_; }
  double fallback_sigma() const noexcept { return sigma_; }
  double fallback_amplitude() const noexcept { return amplitude_; }

 private:
  double mean_;
  double sigma_;
  double amplitude_;
};

}  // namespace tmsv
