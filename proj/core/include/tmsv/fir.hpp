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

#include <span>
#include <vector>

namespace tmsv {

/// Minimum attenuation design_lowpass guarantees from twice the cutoff up
/// to Nyquist.
inline constexpr double kStopbandAttenuationDb = 60.0;

std::vector<double> blackman_window(int taps);

/// Blackman-windowed sinc lowpass. Linear phase (symmetric), DC gain 1.
/// Throws DesignFailure, carrying the smallest sufficient tap count, when the
/// response above 2*cutoff is not at least 60 dB down.
std::vector<double> design_lowpass(double cutoff_hz, double sample_rate_hz, int taps);

/// Same window design without the stopband check; used for internal stages
/// whose band edges are not tied to 2*cutoff.
std::vector<double> windowed_sinc(double cutoff_hz, double sample_rate_hz, int taps);

/// |H(f)| of a symmetric FIR filter.
double amplitude_response(std::span<const double> taps, double freq_hz, double sample_rate_hz);

/// Worst-case attenuation (positive dB) over [band_start_hz, Nyquist].
double stopband_attenuation_db(std::span<const double> taps, double band_start_hz,
                               double sample_rate_hz);

/// Blackman transition width (passband edge to full attenuation) for a
/// given tap count.
double blackman_transition_hz(int taps, double sample_rate_hz);

/// Smallest odd tap count whose Blackman design reaches the 60 dB target at
/// 2*cutoff.
int required_lowpass_taps(double cutoff_hz, double sample_rate_hz);

}  // namespace tmsv
