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

// Digital IQ demodulation: mix with 2 cos(2 pi f t + theta), Blackman
// lowpass, decimate. Only outputs with full filter support are produced, so
// the start-up transient (one filter length) never reaches the statistics.

#include <array>
#include <complex>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <vector>

#include "tmsv/metrics.hpp"
#include "tmsv/synth.hpp"

namespace tmsv {

struct DemodConfig {
  double demod_freq_hz = 1e6;
  double demod_phase_rad = 0.0;
  double lowpass_cutoff_hz = 50e3;
  int filter_taps = 2047;
  int decimation = 160;

  /// Throws invalid-argument; the sample rate bounds demod_freq by Nyquist.
  void validate(double sample_rate_hz) const;
};

enum class Normalization { kRaw, kVacuumNormalized };

struct QuadratureSamples {
  std::vector<double> values;
  double effective_rate = 0.0;
  Normalization normalization = Normalization::kRaw;
  bool dark_subtracted = false;

  void validate() const;
};

/// Block-streaming demodulator for one channel. Filter and oscillator state
/// carries across push() calls, so any split of the input gives identical
/// output.
class Demodulator {
 public:
  Demodulator(const DemodConfig& config, double sample_rate_hz);

  const std::vector<double>& taps() const { return taps_; }
  double output_rate() const { return sample_rate_ / config_.decimation; }

  /// Consumes `input` (every `stride`-th element starting at 0) and appends
  /// the decimated outputs that become available.
  void push(std::span<const double> input, std::vector<double>& out, std::size_t stride = 1);

 private:
  DemodConfig config_;
  double sample_rate_;
  std::vector<double> taps_;
  std::vector<double> ring_;  // doubled ring of mixed samples
  std::size_t head_ = 0;
  std::uint64_t n_ = 0;
  // Local oscillator 2 cos(2 pi f n / fs + theta) by phasor recursion with
  // periodic exact resync.
  std::complex<double> lo_{1.0, 0.0};
  std::complex<double> lo_step_{1.0, 0.0};
  long double cycles_per_sample_ = 0.0L;
};

QuadratureSamples iq_demodulate(const RawSampleStream& stream, std::size_t channel,
                                const DemodConfig& config);

/// Streams a synthesizer through one demodulator per channel without
/// materializing the raw record.
std::array<QuadratureSamples, 2> demodulate_synthesized(const SynthConfig& synth,
                                                        const DemodConfig& config_a,
                                                        const DemodConfig& config_b);

struct VarianceEstimate {
  double variance = 0.0;
  double standard_error = 0.0;
};

/// Variance of `samples` in vacuum units: var(samples) / var(vacuum_ref),
/// with the dark variance removed from numerator and denominator when
/// subtract_dark is set. The standard error propagates each input's
/// variance error using its estimated effective sample size.
VarianceEstimate estimate_variance(const QuadratureSamples& samples,
                                   const QuadratureSamples& vacuum_ref,
                                   const QuadratureSamples& dark_ref, bool subtract_dark);

/// Raw demodulated variances of one channel in the vacuum and dark runs.
struct ChannelCalibration {
  double vacuum_variance = 1.0;
  double dark_variance = 0.0;

  static ChannelCalibration from_runs(const QuadratureSamples& vacuum,
                                      const QuadratureSamples& dark);
  /// Divisor for sample amplitudes and the residual noise floor, in vacuum
  /// units, left in normalized variances.
  double amplitude_scale(bool subtract_dark) const;
  double variance_offset(bool subtract_dark) const;
};

/// Maps a demod phase to the quadrature it selects: 0 -> X, pi/2 -> P
/// (modulo 2 pi, within 1e-6 rad). Anything else is invalid-argument.
Quadrature label_from_phase(double demod_phase_rad);

/// Raw record (un-normalized samples, zero offsets) of one setting.
QuadratureSettingRecord joint_quadrature_run(const RawSampleStream& stream,
                                             const DemodConfig& config_a,
                                             const DemodConfig& config_b);

/// Builds a vacuum-normalized record from already demodulated channels.
QuadratureSettingRecord normalized_record(const QuadratureSamples& a, const QuadratureSamples& b,
                                          Quadrature setting_a, Quadrature setting_b,
                                          const ChannelCalibration& cal_a,
                                          const ChannelCalibration& cal_b, bool subtract_dark);

QuadratureSettingRecord joint_quadrature_run(const RawSampleStream& stream,
                                             const DemodConfig& config_a,
                                             const DemodConfig& config_b,
                                             const ChannelCalibration& cal_a,
                                             const ChannelCalibration& cal_b, bool subtract_dark);

/// CSV with header "sample_index,value".
void write_quadrature_csv(std::ostream& out, const QuadratureSamples& samples);
/// Single-channel raw container at the decimated rate.
void write_quadrature_binary(const std::filesystem::path& path, const QuadratureSamples& samples,
                             double scale);

}  // namespace tmsv
