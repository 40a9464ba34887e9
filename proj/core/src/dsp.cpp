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

#include "tmsv/dsp.hpp"

#include <cmath>
#include <numbers>
#include <ostream>

#include <fmt/format.h>

#include "tmsv/error.hpp"
#include "tmsv/fir.hpp"
#include "tmsv/raw_io.hpp"
#include "tmsv/sample_stats.hpp"

namespace tmsv {
namespace {

constexpr std::uint64_t kResyncInterval = 1024;
constexpr double kLabelTolerance = 1e-6;

double reduce_angle(double phase) {
  double r = std::fmod(phase, 2.0 * std::numbers::pi);
  if (r < 0.0) r += 2.0 * std::numbers::pi;
  return r;
}

}  // namespace

void DemodConfig::validate(double sample_rate_hz) const {
  if (!(sample_rate_hz > 0.0)) throw Error(ErrorKind::kInvalidArgument, "sample rate must be positive");
  if (!(demod_freq_hz > 0.0) || !(demod_freq_hz < sample_rate_hz / 2.0)) {
    throw Error(ErrorKind::kInvalidArgument,
                fmt::format("demod frequency {} Hz must lie in (0, {}) Hz", demod_freq_hz,
                            sample_rate_hz / 2.0));
  }
  if (!(lowpass_cutoff_hz > 0.0) || !(lowpass_cutoff_hz < demod_freq_hz)) {
    throw Error(ErrorKind::kInvalidArgument,
                fmt::format("lowpass cutoff {} Hz must lie in (0, demod frequency {} Hz)",
                            lowpass_cutoff_hz, demod_freq_hz));
  }
  if (filter_taps < 3 || filter_taps % 2 == 0) {
    throw Error(ErrorKind::kInvalidArgument,
                fmt::format("filter_taps must be odd and >= 3, got {}", filter_taps));
  }
  if (decimation < 1) {
    throw Error(ErrorKind::kInvalidArgument,
                fmt::format("decimation must be >= 1, got {}", decimation));
  }
  if (!std::isfinite(demod_phase_rad)) {
    throw Error(ErrorKind::kInvalidArgument, "demod phase must be finite");
  }
}

void QuadratureSamples::validate() const {
  if (!(effective_rate > 0.0)) {
    throw Error(ErrorKind::kInvalidArgument, "effective_rate must be positive");
  }
  for (double v : values) {
    if (!std::isfinite(v)) throw Error(ErrorKind::kInvalidArgument, "non-finite quadrature sample");
  }
}

Demodulator::Demodulator(const DemodConfig& config, double sample_rate_hz)
    : config_(config), sample_rate_(sample_rate_hz) {
  config_.validate(sample_rate_hz);
  taps_ = design_lowpass(config_.lowpass_cutoff_hz, sample_rate_hz, config_.filter_taps);
  ring_.assign(2 * taps_.size(), 0.0);
  cycles_per_sample_ =
      static_cast<long double>(config_.demod_freq_hz) / static_cast<long double>(sample_rate_hz);
  lo_step_ = std::polar(1.0, static_cast<double>(2.0L * std::numbers::pi_v<long double> *
                                                 cycles_per_sample_));
}

void Demodulator::push(std::span<const double> input, std::vector<double>& out,
                       std::size_t stride) {
  const std::size_t taps = taps_.size();
  const std::uint64_t first_valid = taps - 1;
  const auto decimation = static_cast<std::uint64_t>(config_.decimation);
  for (std::size_t i = 0; i < input.size(); i += stride) {
    if (n_ % kResyncInterval == 0) {
      long double cycles = cycles_per_sample_ * static_cast<long double>(n_) +
                           static_cast<long double>(config_.demod_phase_rad) /
                               (2.0L * std::numbers::pi_v<long double>);
      cycles -= std::floor(cycles);
      lo_ = std::polar(1.0,
                       static_cast<double>(2.0L * std::numbers::pi_v<long double> * cycles));
    }
    const double mixed = 2.0 * lo_.real() * input[i];
    lo_ *= lo_step_;
    ring_[head_] = mixed;
    ring_[head_ + taps] = mixed;
    head_ = head_ + 1 == taps ? 0 : head_ + 1;
    // Window [head_, head_ + taps) runs oldest to newest; the filter is
    // symmetric so no reversal is needed.
    if (n_ >= first_valid && (n_ - first_valid) % decimation == 0) {
      const double* w = ring_.data() + head_;
      double acc = 0.0;
      for (std::size_t k = 0; k < taps; ++k) acc += taps_[k] * w[k];
      out.push_back(acc);
    }
    ++n_;
  }
}

QuadratureSamples iq_demodulate(const RawSampleStream& stream, std::size_t channel,
                                const DemodConfig& config) {
  stream.validate();
  if (channel >= stream.n_channels()) {
    throw Error(ErrorKind::kInvalidArgument,
                fmt::format("channel {} out of range ({} channels)", channel, stream.n_channels()));
  }
  Demodulator demod(config, stream.sample_rate);
  QuadratureSamples out;
  out.effective_rate = demod.output_rate();
  out.values.reserve(stream.n_samples() / config.decimation + 1);
  demod.push(stream.channels[channel], out.values);
  return out;
}

std::array<QuadratureSamples, 2> demodulate_synthesized(const SynthConfig& synth,
                                                        const DemodConfig& config_a,
                                                        const DemodConfig& config_b) {
  RfSynthesizer gen(synth);
  Demodulator da(config_a, synth.sample_rate_hz);
  Demodulator db(config_b, synth.sample_rate_hz);
  std::array<QuadratureSamples, 2> out;
  out[0].effective_rate = da.output_rate();
  out[1].effective_rate = db.output_rate();
  out[0].values.reserve(synth.n_samples / config_a.decimation + 1);
  out[1].values.reserve(synth.n_samples / config_b.decimation + 1);

  constexpr Eigen::Index kBlock = 1 << 15;
  Eigen::Matrix<double, 2, Eigen::Dynamic> block(2, kBlock);
  std::uint64_t done = 0;
  while (done < synth.n_samples) {
    const auto len =
        static_cast<Eigen::Index>(std::min<std::uint64_t>(kBlock, synth.n_samples - done));
    auto view = block.leftCols(len);
    gen.generate(view);
    // Column-major 2 x len: channel c sits at offset c with stride 2.
    const std::span<const double> all(block.data(), static_cast<std::size_t>(2 * len));
    da.push(all, out[0].values, 2);
    db.push(all.subspan(1), out[1].values, 2);
    done += static_cast<std::uint64_t>(len);
  }
  return out;
}

VarianceEstimate estimate_variance(const QuadratureSamples& samples,
                                   const QuadratureSamples& vacuum_ref,
                                   const QuadratureSamples& dark_ref, bool subtract_dark) {
  if (samples.effective_rate != vacuum_ref.effective_rate ||
      samples.effective_rate != dark_ref.effective_rate) {
    throw Error(ErrorKind::kInvalidArgument,
                "samples and references come from different demodulation settings");
  }
  const double a = sample_variance(samples.values);
  const double b = sample_variance(vacuum_ref.values);
  const double d = sample_variance(dark_ref.values);
  if (!(b > d)) {
    throw Error(ErrorKind::kCalibrationFailure,
                fmt::format("vacuum variance {:.6g} does not exceed dark variance {:.6g}", b, d));
  }
  const double floor = subtract_dark ? d : 0.0;
  const double denom = b - floor;
  const double r = (a - floor) / denom;

  auto var_err = [](const QuadratureSamples& s, double v) {
    return v * std::sqrt(2.0 / effective_sample_size(s.values));
  };
  const double ea = var_err(samples, a) / denom;
  const double eb = var_err(vacuum_ref, b) * r / denom;
  const double ed = subtract_dark ? var_err(dark_ref, d) * (r - 1.0) / denom : 0.0;
  return {r, std::sqrt(ea * ea + eb * eb + ed * ed)};
}

ChannelCalibration ChannelCalibration::from_runs(const QuadratureSamples& vacuum,
                                                 const QuadratureSamples& dark) {
  ChannelCalibration cal;
  cal.vacuum_variance = sample_variance(vacuum.values);
  cal.dark_variance = sample_variance(dark.values);
  if (!(cal.vacuum_variance > cal.dark_variance)) {
    throw Error(ErrorKind::kCalibrationFailure,
                fmt::format("vacuum variance {:.6g} does not exceed dark variance {:.6g}",
                            cal.vacuum_variance, cal.dark_variance));
  }
  return cal;
}

double ChannelCalibration::amplitude_scale(bool subtract_dark) const {
  return std::sqrt(subtract_dark ? vacuum_variance - dark_variance : vacuum_variance);
}

double ChannelCalibration::variance_offset(bool subtract_dark) const {
  return subtract_dark ? dark_variance / (vacuum_variance - dark_variance) : 0.0;
}

Quadrature label_from_phase(double demod_phase_rad) {
  const double r = reduce_angle(demod_phase_rad);
  auto near = [&](double target) {
    const double d = std::abs(r - target);
    return std::min(d, 2.0 * std::numbers::pi - d) < kLabelTolerance;
  };
  if (near(0.0)) return Quadrature::kX;
  if (near(std::numbers::pi / 2.0)) return Quadrature::kP;
  throw Error(ErrorKind::kInvalidArgument,
              fmt::format("demod phase {} rad selects neither X (0) nor P (pi/2)",
                          demod_phase_rad));
}

QuadratureSettingRecord joint_quadrature_run(const RawSampleStream& stream,
                                             const DemodConfig& config_a,
                                             const DemodConfig& config_b) {
  if (stream.n_channels() != 2) {
    throw Error(ErrorKind::kInvalidArgument,
                fmt::format("joint run needs 2 channels, stream has {}", stream.n_channels()));
  }
  QuadratureSettingRecord rec;
  rec.setting_a = label_from_phase(config_a.demod_phase_rad);
  rec.setting_b = label_from_phase(config_b.demod_phase_rad);
  rec.samples_a = iq_demodulate(stream, 0, config_a).values;
  rec.samples_b = iq_demodulate(stream, 1, config_b).values;
  return rec;
}

QuadratureSettingRecord normalized_record(const QuadratureSamples& a, const QuadratureSamples& b,
                                          Quadrature setting_a, Quadrature setting_b,
                                          const ChannelCalibration& cal_a,
                                          const ChannelCalibration& cal_b, bool subtract_dark) {
  QuadratureSettingRecord rec;
  rec.setting_a = setting_a;
  rec.setting_b = setting_b;
  const double sa = 1.0 / cal_a.amplitude_scale(subtract_dark);
  const double sb = 1.0 / cal_b.amplitude_scale(subtract_dark);
  rec.samples_a.reserve(a.values.size());
  rec.samples_b.reserve(b.values.size());
  for (double v : a.values) rec.samples_a.push_back(v * sa);
  for (double v : b.values) rec.samples_b.push_back(v * sb);
  rec.variance_offset_a = cal_a.variance_offset(subtract_dark);
  rec.variance_offset_b = cal_b.variance_offset(subtract_dark);
  rec.validate();
  return rec;
}

QuadratureSettingRecord joint_quadrature_run(const RawSampleStream& stream,
                                             const DemodConfig& config_a,
                                             const DemodConfig& config_b,
                                             const ChannelCalibration& cal_a,
                                             const ChannelCalibration& cal_b, bool subtract_dark) {
  if (stream.n_channels() != 2) {
    throw Error(ErrorKind::kInvalidArgument,
                fmt::format("joint run needs 2 channels, stream has {}", stream.n_channels()));
  }
  return normalized_record(iq_demodulate(stream, 0, config_a), iq_demodulate(stream, 1, config_b),
                           label_from_phase(config_a.demod_phase_rad),
                           label_from_phase(config_b.demod_phase_rad), cal_a, cal_b,
                           subtract_dark);
}

void write_quadrature_csv(std::ostream& out, const QuadratureSamples& samples) {
  out << "sample_index,value\n";
  for (std::size_t i = 0; i < samples.values.size(); ++i) {
    out << fmt::format("{},{:.17g}\n", i, samples.values[i]);
  }
  if (!out) throw Error(ErrorKind::kIoError, "CSV write failed");
}

void write_quadrature_binary(const std::filesystem::path& path, const QuadratureSamples& samples,
                             double scale) {
  RawWriter writer(path, samples.effective_rate, 1, scale);
  writer.write(samples.values);
  writer.close();
}

}  // namespace tmsv
