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


#include <cmath>
#include <complex>
#include <numbers>
#include <numeric>

#include <gtest/gtest.h>

#include "tmsv/error.hpp"
#include "tmsv/fir.hpp"
#include "test_util.hpp"

namespace tmsv {
namespace {

using testing::kind_of;

// |sum_n h_n e^{-i w n}| evaluated directly.
double dtft_magnitude(const std::vector<double>& h, double f, double fs) {
  std::complex<double> acc = 0.0;
  const double w = 2.0 * std::numbers::pi * f / fs;
  for (std::size_t n = 0; n < h.size(); ++n) {
    acc += h[n] * std::polar(1.0, -w * static_cast<double>(n));
  }
  return std::abs(acc);
}

TEST(Fir, DcGainAndSymmetry) {
  for (int taps : {255, 511, 2047}) {
    const auto h = design_lowpass(50e3, 16e6 / 4, taps);
    ASSERT_EQ(static_cast<int>(h.size()), taps);
    EXPECT_NEAR(std::accumulate(h.begin(), h.end(), 0.0), 1.0, 1e-6);
    for (int n = 0; n < taps; ++n) EXPECT_EQ(h[n], h[taps - 1 - n]);
  }
}

TEST(Fir, ToneAtFourTimesCutoffIsAttenuated) {
  const double fs = 16e6, fc = 50e3;
  const auto h = design_lowpass(fc, fs, 2047);
  const double att = -20.0 * std::log10(dtft_magnitude(h, 4.0 * fc, fs));
  EXPECT_GE(att, 60.0);
  // Passband stays flat near DC.
  EXPECT_NEAR(dtft_magnitude(h, 0.2 * fc, fs), 1.0, 1e-3);
}

TEST(Fir, AmplitudeResponseMatchesDirectTransform) {
  const double fs = 1e6;
  const auto h = design_lowpass(20e3, fs, 601);
  for (double f : {0.0, 5e3, 19e3, 40e3, 77e3, 250e3, 499e3}) {
    EXPECT_NEAR(amplitude_response(h, f, fs), dtft_magnitude(h, f, fs), 1e-12) << f;
  }
}

TEST(Fir, StopbandGuaranteeHoldsOnFineGrid) {
  const double fs = 1e6, fc = 20e3;
  const auto h = design_lowpass(fc, fs, required_lowpass_taps(fc, fs));
  double worst = 0.0;
  for (double f = 2.0 * fc; f <= fs / 2; f += 37.0) worst = std::max(worst, dtft_magnitude(h, f, fs));
  // Grid in the library is coarser; allow a small margin for the peak between points.
  EXPECT_LE(-20.0 * std::log10(worst), 60.0 + 3.0);
  EXPECT_GE(-20.0 * std::log10(worst), 60.0 - 0.5);
}

TEST(Fir, InfeasibleDesignCarriesRequiredTaps) {
  const double fs = 16e6, fc = 50e3;
  try {
    design_lowpass(fc, fs, 101);
    FAIL() << "expected DesignFailure";
  } catch (const DesignFailure& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kDesignFailure);
    const int need = e.required_taps();
    EXPECT_EQ(need % 2, 1);
    EXPECT_GT(need, 101);
    EXPECT_NO_THROW(design_lowpass(fc, fs, need));
    EXPECT_THROW(design_lowpass(fc, fs, need - 2), DesignFailure);
  }
}

TEST(Fir, InvalidArguments) {
  EXPECT_EQ(kind_of([] { design_lowpass(50e3, 1e6, 100); }), ErrorKind::kInvalidArgument);
  EXPECT_EQ(kind_of([] { design_lowpass(600e3, 1e6, 101); }), ErrorKind::kInvalidArgument);
  EXPECT_EQ(kind_of([] { design_lowpass(-1.0, 1e6, 101); }), ErrorKind::kInvalidArgument);
  EXPECT_EQ(kind_of([] { design_lowpass(50e3, 0.0, 101); }), ErrorKind::kInvalidArgument);
}

TEST(Fir, BlackmanWindowShape) {
  const auto w = blackman_window(101);
  EXPECT_NEAR(w.front(), 0.0, 1e-15);
  EXPECT_NEAR(w.back(), 0.0, 1e-15);
  EXPECT_NEAR(w[50], 1.0, 1e-15);
}

}  // namespace
}  // namespace tmsv
