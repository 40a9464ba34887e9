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

// Synthetic homodyne detector output.
//
// Each arm k carries an RF sideband around the carrier f:
//
//   s_k(t) = sqrt(scale) * (X_k(t) cos(2 pi f t - phi_k) - P_k(t) sin(2 pi f t - phi_k))
//            + spur tones
//
// where (X_A, P_A, X_B, P_B) are jointly Gaussian band-limited processes
// with the target covariance (plus in-band detector dark noise), and phi_k
// is the homodyne LO phase. Demodulating with 2 cos(2 pi f t + theta)
// recovers the quadrature at angle phi_k + theta, i.e.
// X cos(phi_k + theta) + P sin(phi_k + theta).

#include <complex>
#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace tmsv {

struct SpurTone {
  double frequency_hz = 0.0;
  double amplitude = 0.0;  // relative to the vacuum RF rms amplitude sqrt(scale)
  double phase_rad = 0.0;
};

struct SynthConfig {
  Eigen::Matrix4d target_cov = Eigen::Matrix4d::Identity();
  /// false models blocked optics (dark-noise calibration run): only detector
  /// dark noise and spur tones remain.
  bool optical_signal = true;
  double carrier_hz = 1e6;
  double sample_rate_hz = 16e6;
  double bandwidth_hz = 20e3;
  std::uint64_t n_samples = 1u << 20;
  /// Dark-noise variance relative to vacuum, in dB; -infinity disables it.
  double dark_noise_db = -20.0;
  std::vector<SpurTone> spur_tones;
  /// Tones closer than this to the carrier land inside the demodulated band
  /// and produce a config-conflict warning (set from the demod lowpass).
  double tone_warning_band_hz = 50e3;
  double lo_phase_a = 0.0;
  double lo_phase_b = 0.0;
  double vacuum_scale = 1.0;
  std::uint64_t seed = 1;

  double duration_s() const { return static_cast<double>(n_samples) / sample_rate_hz; }
  /// Throws Error on an invalid configuration. Returns non-fatal warnings
  /// (e.g. a spur tone placed inside the signal band).
  std::vector<std::string> validate() const;
};

/// Synchronized multi-channel ADC record.
struct RawSampleStream {
  double sample_rate = 0.0;
  /// Vacuum variance after demodulation with a filter that passes the whole
  /// signal band.
  double scale = 1.0;
  std::vector<std::vector<double>> channels;

  std::size_t n_channels() const { return channels.size(); }
  std::size_t n_samples() const { return channels.empty() ? 0 : channels.front().size(); }
  void validate() const;
};

/// Factor F with F F^T = cov from a symmetric eigendecomposition.
/// Eigenvalues in [-1e-10 * scale, 0) are clamped to zero; anything more
/// negative is a factorization-failure.
Eigen::MatrixXd covariance_factor(const Eigen::MatrixXd& cov);

/// Streaming generator of zero-mean jointly Gaussian processes with flat
/// spectrum inside |f| < bandwidth and covariance `cov`.
///
/// White noise is drawn at a reduced rate in fixed-size blocks with seeds
/// derived from (seed, block index), band-limited by a linear-phase lowpass,
/// mixed by the covariance factor and interpolated to the output rate. Output
/// is identical no matter how the caller splits generate() calls.
class BasebandGenerator {
 public:
  BasebandGenerator(const Eigen::MatrixXd& cov, double bandwidth_hz, double sample_rate_hz,
                    std::uint64_t seed);

  Eigen::Index n_processes() const { return factor_.rows(); }
  int interpolation_factor() const { return interp_; }

  /// Fills `out` (n_processes x block_length), column = time sample.
  void generate(Eigen::Ref<Eigen::MatrixXd> out);

 private:
  void advance_low_rate();
  const double* next_white();

  Eigen::MatrixXd factor_;
  int interp_ = 1;
  std::uint64_t seed_;

  // White noise.
  Eigen::MatrixXd white_block_;
  Eigen::Index white_pos_ = 0;
  std::uint64_t white_block_index_ = 0;

  // Stage 1: band-limiting FIR at the reduced rate.
  Eigen::VectorXd stage1_taps_;
  Eigen::MatrixXd stage1_history_;  // doubled ring buffer, n x 2N1
  Eigen::Index stage1_head_ = 0;

  // Stage 2: polyphase interpolation; phase_matrix_(j, p) = L * h2[p + j L].
  Eigen::MatrixXd phase_matrix_;
  Eigen::MatrixXd stage2_history_;  // doubled ring buffer, n x 2J, newest first
  Eigen::Index stage2_head_ = 0;

  Eigen::MatrixXd pending_;  // n x L outputs of the current low-rate step
  Eigen::Index pending_pos_ = 0;
};

/// Materialized convenience wrapper. Rows are (X_A, P_A, X_B, P_B).
Eigen::Matrix<double, 4, Eigen::Dynamic> synthesize_baseband(const Eigen::Matrix4d& target_cov,
                                                             std::size_t n_samples,
                                                             double bandwidth_hz,
                                                             double sample_rate_hz,
                                                             std::uint64_t seed);

/// Streaming two-channel RF synthesizer; see the header comment for the
/// signal model.
class RfSynthesizer {
 public:
  explicit RfSynthesizer(SynthConfig config);

  const SynthConfig& config() const { return config_; }
  const std::vector<std::string>& warnings() const { return warnings_; }
  std::uint64_t position() const { return position_; }

  /// Fills `out` (2 x block_length) with the next samples of both channels.
  void generate(Eigen::Ref<Eigen::Matrix<double, 2, Eigen::Dynamic>> out);

 private:
  struct Oscillator {
    double cycles_per_sample = 0.0;
    double phase = 0.0;
    std::complex<double> value{1.0, 0.0};
    std::complex<double> step{1.0, 0.0};
    void resync(std::uint64_t n);
  };

  SynthConfig config_;
  std::vector<std::string> warnings_;
  BasebandGenerator baseband_;
  Oscillator carrier_;
  std::vector<Oscillator> tones_;
  std::vector<double> tone_amplitude_;
  std::complex<double> lo_a_;
  std::complex<double> lo_b_;
  double rf_gain_;
  std::uint64_t position_ = 0;
  Eigen::MatrixXd baseband_block_;
};

RawSampleStream synthesize_rf(const SynthConfig& config);

}  // namespace tmsv
