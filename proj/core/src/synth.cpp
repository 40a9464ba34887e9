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

#include "tmsv/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include <Eigen/Eigenvalues>
#include <fmt/format.h>

#include "tmsv/error.hpp"
#include "tmsv/fir.hpp"
#include "tmsv/gaussian_state.hpp"
#include "tmsv/random.hpp"

namespace tmsv {
namespace {

constexpr Eigen::Index kWhiteBlock = 4096;
constexpr std::uint64_t kResyncInterval = 1024;
constexpr double kClampTolerance = 1e-10;

int odd_at_least(double n) {
  int taps = static_cast<int>(std::ceil(n));
  if (taps % 2 == 0) ++taps;
  return std::max(taps, 3);
}

void check_rates(double bandwidth_hz, double sample_rate_hz) {
  if (!(sample_rate_hz > 0.0) || !std::isfinite(sample_rate_hz)) {
    throw Error(ErrorKind::kInvalidArgument,
                fmt::format("sample rate must be positive, got {}", sample_rate_hz));
  }
  if (!(bandwidth_hz > 0.0) || !(bandwidth_hz < sample_rate_hz / 2.0)) {
    throw Error(ErrorKind::kInvalidArgument,
                fmt::format("bandwidth {} Hz must lie in (0, {}) Hz", bandwidth_hz,
                            sample_rate_hz / 2.0));
  }
}

}  // namespace

Eigen::MatrixXd covariance_factor(const Eigen::MatrixXd& cov) {
  if (cov.rows() != cov.cols() || cov.rows() == 0) {
    throw Error(ErrorKind::kInvalidArgument, "covariance must be a non-empty square matrix");
  }
  if (!cov.allFinite()) {
    throw Error(ErrorKind::kInvalidArgument, "covariance has non-finite entries");
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (cov + cov.transpose()));
  if (es.info() != Eigen::Success) {
    throw Error(ErrorKind::kFactorizationFailure, "eigendecomposition did not converge");
  }
  Eigen::VectorXd lambda = es.eigenvalues();
  for (Eigen::Index i = 0; i < lambda.size(); ++i) {
    if (lambda(i) < -kClampTolerance) {
      throw Error(ErrorKind::kFactorizationFailure,
                  fmt::format("covariance is not positive semidefinite (eigenvalue {:.3g})",
                              lambda(i)));
    }
    lambda(i) = std::sqrt(std::max(lambda(i), 0.0));
  }
  return es.eigenvectors() * lambda.asDiagonal();
}

// --- BasebandGenerator -----------------------------------------------------

BasebandGenerator::BasebandGenerator(const Eigen::MatrixXd& cov, double bandwidth_hz,
                                     double sample_rate_hz, std::uint64_t seed)
    : factor_(covariance_factor(cov)), seed_(seed) {
  check_rates(bandwidth_hz, sample_rate_hz);
  const Eigen::Index n = factor_.rows();

  interp_ = std::max(1, static_cast<int>(std::floor(sample_rate_hz / (8.0 * bandwidth_hz))));
  const double low_rate = sample_rate_hz / interp_;

  // Stage 1 shapes the band at the reduced rate: stopband from the nominal
  // bandwidth, power gain normalized to 1.
  const double transition1 = 0.25 * bandwidth_hz;
  const int n1 = odd_at_least(5.5 * low_rate / transition1 + 1.0);
  const double cutoff1 = std::min(bandwidth_hz - transition1 / 2.0, 0.45 * low_rate);
  std::vector<double> h1 = windowed_sinc(cutoff1, low_rate, n1);
  double energy = 0.0;
  for (double v : h1) energy += v * v;
  stage1_taps_ = Eigen::Map<const Eigen::VectorXd>(h1.data(), n1) / std::sqrt(energy);
  stage1_history_ = Eigen::MatrixXd::Zero(n, 2 * n1);

  // Stage 2 interpolates by L; images begin at low_rate - bandwidth.
  const int L = interp_;
  Eigen::Index J = 1;
  if (L == 1) {
    phase_matrix_ = Eigen::MatrixXd::Ones(1, 1);
  } else {
    const double transition2 = low_rate - 2.0 * bandwidth_hz;
    const int n2 = odd_at_least(5.5 * sample_rate_hz / transition2 + 1.0);
    const std::vector<double> h2 = windowed_sinc(low_rate / 2.0, sample_rate_hz, n2);
    J = (n2 + L - 1) / L;
    phase_matrix_ = Eigen::MatrixXd::Zero(J, L);
    for (int q = 0; q < n2; ++q) phase_matrix_(q / L, q % L) = L * h2[q];
  }

  // Exact output power for unit white input, averaged over the L output
  // phases; rescale so the mixed output has exactly the target covariance.
  auto stage1_acf = [&](Eigen::Index lag) {
    lag = std::abs(lag);
    if (lag >= stage1_taps_.size()) return 0.0;
    return stage1_taps_.head(stage1_taps_.size() - lag).dot(stage1_taps_.tail(stage1_taps_.size() - lag));
  };
  Eigen::MatrixXd acf(J, J);
  for (Eigen::Index a = 0; a < J; ++a)
    for (Eigen::Index b = 0; b < J; ++b) acf(a, b) = stage1_acf(a - b);
  double power = 0.0;
  for (int p = 0; p < L; ++p) power += phase_matrix_.col(p).dot(acf * phase_matrix_.col(p));
  power /= L;
  phase_matrix_ /= std::sqrt(power);

  stage2_history_ = Eigen::MatrixXd::Zero(n, 2 * J);
  pending_ = Eigen::MatrixXd::Zero(n, L);
  white_block_.resize(n, kWhiteBlock);
  white_pos_ = kWhiteBlock;  // forces the first block draw

  // Fill both filter histories before anything is emitted.
  const Eigen::Index warmup = stage1_taps_.size() + J;
  for (Eigen::Index i = 0; i < warmup; ++i) advance_low_rate();
  pending_pos_ = 0;
}

const double* BasebandGenerator::next_white() {
  if (white_pos_ == kWhiteBlock) {
    Rng rng(derive_seed(seed_, white_block_index_++));
    std::normal_distribution<double> normal;
    double* data = white_block_.data();
    for (Eigen::Index i = 0; i < white_block_.size(); ++i) data[i] = normal(rng);
    white_pos_ = 0;
  }
  return white_block_.col(white_pos_++).data();
}

void BasebandGenerator::advance_low_rate() {
  const Eigen::Index n = factor_.rows();
  const Eigen::Index n1 = stage1_taps_.size();
  const Eigen::Index J = phase_matrix_.rows();

  // Newest-first doubled ring buffers: the window [head, head + N) is always
  // a contiguous block with column 0 the latest sample.
  const Eigen::Map<const Eigen::VectorXd> w(next_white(), n);
  stage1_head_ = (stage1_head_ == 0 ? n1 : stage1_head_) - 1;
  stage1_history_.col(stage1_head_) = w;
  stage1_history_.col(stage1_head_ + n1) = w;
  const Eigen::VectorXd shaped = stage1_history_.middleCols(stage1_head_, n1) * stage1_taps_;

  const Eigen::VectorXd mixed = factor_ * shaped;
  stage2_head_ = (stage2_head_ == 0 ? J : stage2_head_) - 1;
  stage2_history_.col(stage2_head_) = mixed;
  stage2_history_.col(stage2_head_ + J) = mixed;
  pending_.noalias() = stage2_history_.middleCols(stage2_head_, J) * phase_matrix_;
  pending_pos_ = 0;
}

void BasebandGenerator::generate(Eigen::Ref<Eigen::MatrixXd> out) {
  if (out.rows() != factor_.rows()) {
    throw Error(ErrorKind::kInvalidArgument,
                fmt::format("output has {} rows, generator has {} processes", out.rows(),
                            factor_.rows()));
  }
  const Eigen::Index L = interp_;
  Eigen::Index col = 0;
  while (col < out.cols()) {
    if (pending_pos_ == L) advance_low_rate();
    const Eigen::Index take = std::min(L - pending_pos_, out.cols() - col);
    out.middleCols(col, take) = pending_.middleCols(pending_pos_, take);
    pending_pos_ += take;
    col += take;
  }
}

Eigen::Matrix<double, 4, Eigen::Dynamic> synthesize_baseband(const Eigen::Matrix4d& target_cov,
                                                             std::size_t n_samples,
                                                             double bandwidth_hz,
                                                             double sample_rate_hz,
                                                             std::uint64_t seed) {
  BasebandGenerator gen(target_cov, bandwidth_hz, sample_rate_hz, seed);
  Eigen::Matrix<double, 4, Eigen::Dynamic> out(4, static_cast<Eigen::Index>(n_samples));
  gen.generate(out);
  return out;
}

// --- SynthConfig -------------------------------------------------------------

std::vector<std::string> SynthConfig::validate() const {
  check_rates(bandwidth_hz, sample_rate_hz);
  const double nyquist = sample_rate_hz / 2.0;
  if (!(carrier_hz > 0.0) || !(carrier_hz < nyquist)) {
    throw Error(ErrorKind::kInvalidArgument,
                fmt::format("carrier {} Hz must lie in (0, {}) Hz", carrier_hz, nyquist));
  }
  if (!(bandwidth_hz < carrier_hz) || !(carrier_hz + bandwidth_hz < nyquist)) {
    throw Error(ErrorKind::kInvalidArgument,
                fmt::format("sideband {} +- {} Hz must fit between DC and {} Hz", carrier_hz,
                            bandwidth_hz, nyquist));
  }
  if (n_samples == 0) throw Error(ErrorKind::kInvalidArgument, "n_samples must be positive");
  if (!(dark_noise_db <= 0.0)) {
    throw Error(ErrorKind::kInvalidArgument,
                fmt::format("dark_noise_db must be <= 0, got {}", dark_noise_db));
  }
  if (!(vacuum_scale > 0.0) || !std::isfinite(vacuum_scale)) {
    throw Error(ErrorKind::kInvalidArgument, "vacuum_scale must be positive");
  }
  if (!std::isfinite(lo_phase_a) || !std::isfinite(lo_phase_b)) {
    throw Error(ErrorKind::kInvalidArgument, "LO phases must be finite");
  }
  // Throws unphysical-state for targets violating the uncertainty relation.
  GaussianState(Eigen::VectorXd::Zero(4), target_cov);

  std::vector<std::string> warnings;
  for (const SpurTone& tone : spur_tones) {
    if (!(tone.frequency_hz > 0.0) || !(tone.frequency_hz < nyquist)) {
      throw Error(ErrorKind::kInvalidArgument,
                  fmt::format("spur tone at {} Hz violates Nyquist ({} Hz)", tone.frequency_hz,
                              nyquist));
    }
    if (!std::isfinite(tone.amplitude) || !std::isfinite(tone.phase_rad)) {
      throw Error(ErrorKind::kInvalidArgument, "spur tone amplitude and phase must be finite");
    }
    if (std::abs(tone.frequency_hz - carrier_hz) < tone_warning_band_hz) {
      warnings.push_back(fmt::format(
          "config-conflict: spur tone at {} Hz lies within {} Hz of the carrier and will "
          "leak into the demodulated band",
          tone.frequency_hz, tone_warning_band_hz));
    }
  }
  return warnings;
}

void RawSampleStream::validate() const {
  if (!(sample_rate > 0.0)) throw Error(ErrorKind::kInvalidArgument, "sample_rate must be positive");
  if (!(scale > 0.0)) throw Error(ErrorKind::kInvalidArgument, "scale must be positive");
  if (channels.empty()) throw Error(ErrorKind::kInvalidArgument, "stream has no channels");
  for (const auto& ch : channels) {
    if (ch.size() != channels.front().size()) {
      throw Error(ErrorKind::kInvalidArgument, "channels have unequal lengths");
    }
  }
}

// --- RfSynthesizer -----------------------------------------------------------

void RfSynthesizer::Oscillator::resync(std::uint64_t n) {
  long double cycles = static_cast<long double>(cycles_per_sample) * static_cast<long double>(n) +
                       static_cast<long double>(phase) / (2.0L * std::numbers::pi_v<long double>);
  cycles -= std::floor(cycles);
  const double angle = static_cast<double>(2.0L * std::numbers::pi_v<long double> * cycles);
  value = std::polar(1.0, angle);
}

namespace {

Eigen::Matrix4d baseband_covariance(const SynthConfig& c) {
  const double dark = std::isfinite(c.dark_noise_db) ? std::pow(10.0, c.dark_noise_db / 10.0) : 0.0;
  Eigen::Matrix4d cov = dark * Eigen::Matrix4d::Identity();
  if (c.optical_signal) cov += c.target_cov;
  return cov;
}

const SynthConfig& validated(const SynthConfig& c, std::vector<std::string>& warnings) {
  warnings = c.validate();
  return c;
}

}  // namespace

RfSynthesizer::RfSynthesizer(SynthConfig config)
    : config_(std::move(config)),
      baseband_(baseband_covariance(validated(config_, warnings_)), config_.bandwidth_hz,
                config_.sample_rate_hz, config_.seed),
      lo_a_(std::polar(1.0, -config_.lo_phase_a)),
      lo_b_(std::polar(1.0, -config_.lo_phase_b)),
      rf_gain_(std::sqrt(config_.vacuum_scale)) {
  auto make = [&](double freq, double phase) {
    Oscillator osc;
    osc.cycles_per_sample = freq / config_.sample_rate_hz;
    osc.phase = phase;
    osc.step = std::polar(1.0, 2.0 * std::numbers::pi * osc.cycles_per_sample);
    osc.resync(0);
    return osc;
  };
  carrier_ = make(config_.carrier_hz, 0.0);
  for (const SpurTone& tone : config_.spur_tones) {
    tones_.push_back(make(tone.frequency_hz, tone.phase_rad));
    tone_amplitude_.push_back(rf_gain_ * tone.amplitude);
  }
}

void RfSynthesizer::generate(Eigen::Ref<Eigen::Matrix<double, 2, Eigen::Dynamic>> out) {
  const Eigen::Index len = out.cols();
  if (baseband_block_.cols() != len) baseband_block_.resize(4, len);
  baseband_.generate(baseband_block_);

  for (Eigen::Index i = 0; i < len; ++i) {
    const std::uint64_t n = position_ + static_cast<std::uint64_t>(i);
    if (n % kResyncInterval == 0) {
      carrier_.resync(n);
      for (Oscillator& t : tones_) t.resync(n);
    }
    const auto col = baseband_block_.col(i);
    // Re[(X + iP) e^{i(wt - phi)}] = X cos(wt - phi) - P sin(wt - phi)
    const std::complex<double> ca = carrier_.value * lo_a_;
    const std::complex<double> cb = carrier_.value * lo_b_;
    double spur = 0.0;
    for (std::size_t k = 0; k < tones_.size(); ++k) {
      spur += tone_amplitude_[k] * tones_[k].value.real();
      tones_[k].value *= tones_[k].step;
    }
    out(0, i) = rf_gain_ * (col(0) * ca.real() - col(1) * ca.imag()) + spur;
    out(1, i) = rf_gain_ * (col(2) * cb.real() - col(3) * cb.imag()) + spur;
    carrier_.value *= carrier_.step;
  }
  position_ += static_cast<std::uint64_t>(len);
}

RawSampleStream synthesize_rf(const SynthConfig& config) {
  RfSynthesizer synth(config);
  RawSampleStream stream;
  stream.sample_rate = config.sample_rate_hz;
  stream.scale = config.vacuum_scale;
  stream.channels.assign(2, std::vector<double>(config.n_samples));
  constexpr Eigen::Index kBlock = 1 << 16;
  Eigen::Matrix<double, 2, Eigen::Dynamic> block(2, kBlock);
  std::uint64_t done = 0;
  while (done < config.n_samples) {
    const auto len = static_cast<Eigen::Index>(std::min<std::uint64_t>(kBlock, config.n_samples - done));
    auto view = block.leftCols(len);
    synth.generate(view);
    for (Eigen::Index i = 0; i < len; ++i) {
      stream.channels[0][done + i] = block(0, i);
      stream.channels[1][done + i] = block(1, i);
    }
    done += static_cast<std::uint64_t>(len);
  }
  return stream;
}

}  // namespace tmsv
