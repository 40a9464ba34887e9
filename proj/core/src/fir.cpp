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

#include "tmsv/fir.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include <fmt/format.h>

#include "tmsv/error.hpp"

namespace tmsv {
namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

void check_design(double cutoff_hz, double sample_rate_hz, int taps) {
  if (!(sample_rate_hz > 0.0) || !(cutoff_hz > 0.0) || !(cutoff_hz < sample_rate_hz / 2.0)) {
    throw Error(ErrorKind::kInvalidArgument,
                fmt::format("lowpass cutoff {} Hz must lie in (0, {}) Hz", cutoff_hz,
                            sample_rate_hz / 2.0));
  }
  if (taps < 3 || taps % 2 == 0) {
    throw Error(ErrorKind::kInvalidArgument,
                fmt::format("lowpass tap count must be odd and >= 3, got {}", taps));
  }
}

bool meets_stopband(double cutoff_hz, double sample_rate_hz, int taps) {
  if (2.0 * cutoff_hz >= sample_rate_hz / 2.0) return true;
  const auto h = windowed_sinc(cutoff_hz, sample_rate_hz, taps);
  return stopband_attenuation_db(h, 2.0 * cutoff_hz, sample_rate_hz) >= kStopbandAttenuationDb;
}

}  // namespace

std::vector<double> blackman_window(int taps) {
  std::vector<double> w(static_cast<std::size_t>(taps));
  if (taps == 1) {
    w[0] = 1.0;
    return w;
  }
  const double m = taps - 1;
  for (int n = 0; n < taps; ++n) {
    w[n] = 0.42 - 0.5 * std::cos(kTwoPi * n / m) + 0.08 * std::cos(2.0 * kTwoPi * n / m);
  }
  return w;
}

std::vector<double> windowed_sinc(double cutoff_hz, double sample_rate_hz, int taps) {
  check_design(cutoff_hz, sample_rate_hz, taps);
  const std::vector<double> w = blackman_window(taps);
  const double fc = cutoff_hz / sample_rate_hz;
  const int center = (taps - 1) / 2;
  std::vector<double> h(static_cast<std::size_t>(taps));
  double sum = 0.0;
  for (int n = 0; n < taps; ++n) {
    const int k = n - center;
    const double sinc =
        k == 0 ? 2.0 * fc : std::sin(kTwoPi * fc * k) / (std::numbers::pi * k);
    h[n] = sinc * w[n];
    sum += h[n];
  }
  for (double& v : h) v /= sum;
  // Exact symmetry, so the phase is exactly linear.
  for (int n = 0; n < center; ++n) {
    const double avg = 0.5 * (h[n] + h[taps - 1 - n]);
    h[n] = h[taps - 1 - n] = avg;
  }
  return h;
}

std::vector<double> design_lowpass(double cutoff_hz, double sample_rate_hz, int taps) {
  check_design(cutoff_hz, sample_rate_hz, taps);
  if (!meets_stopband(cutoff_hz, sample_rate_hz, taps)) {
    const int required = required_lowpass_taps(cutoff_hz, sample_rate_hz);
    throw DesignFailure(
        fmt::format("{} taps cannot reach {} dB at 2 x {} Hz (fs = {} Hz); need at least {} taps",
                    taps, kStopbandAttenuationDb, cutoff_hz, sample_rate_hz, required),
        required);
  }
  return windowed_sinc(cutoff_hz, sample_rate_hz, taps);
}

double amplitude_response(std::span<const double> taps, double freq_hz, double sample_rate_hz) {
  // Zero-phase amplitude of a symmetric filter, cos(k theta) by recurrence.
  const std::size_t n = taps.size();
  const std::size_t center = (n - 1) / 2;
  const double theta = kTwoPi * freq_hz / sample_rate_hz;
  const double c1 = std::cos(theta);
  double acc = taps[center];
  double prev = 1.0;    // cos(0)
  double curr = c1;     // cos(theta)
  for (std::size_t k = 1; k <= center; ++k) {
    acc += 2.0 * taps[center + k] * curr;
    const double next = 2.0 * c1 * curr - prev;
    prev = curr;
    curr = next;
  }
  return std::abs(acc);
}

double stopband_attenuation_db(std::span<const double> taps, double band_start_hz,
                               double sample_rate_hz) {
  const double nyquist = sample_rate_hz / 2.0;
  if (band_start_hz >= nyquist) return std::numeric_limits<double>::infinity();
  // Eight grid points per sidelobe width (fs / taps).
  const double step = sample_rate_hz / (8.0 * static_cast<double>(taps.size()));
  double worst = 0.0;
  for (double f = band_start_hz; f <= nyquist; f += step) {
    worst = std::max(worst, amplitude_response(taps, f, sample_rate_hz));
  }
  worst = std::max(worst, amplitude_response(taps, nyquist, sample_rate_hz));
  if (worst == 0.0) return std::numeric_limits<double>::infinity();
  return -20.0 * std::log10(worst);
}

double blackman_transition_hz(int taps, double sample_rate_hz) {
  return 5.5 * sample_rate_hz / static_cast<double>(taps - 1);
}

int required_lowpass_taps(double cutoff_hz, double sample_rate_hz) {
  check_design(cutoff_hz, sample_rate_hz, 3);
  int lo = 1;  // known failing (or trivially small) count
  int hi = 3;
  while (!meets_stopband(cutoff_hz, sample_rate_hz, hi)) {
    lo = hi;
    hi = 2 * hi + 1;
    if (hi > (1 << 24)) {
      throw Error(ErrorKind::kDesignFailure, "lowpass target needs an unreasonable tap count");
    }
  }
  while (hi - lo > 2) {
    int mid = lo + (hi - lo) / 2;
    if (mid % 2 == 0) ++mid;
    if (mid >= hi) break;
    if (meets_stopband(cutoff_hz, sample_rate_hz, mid)) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  return hi;
}

}  // namespace tmsv
