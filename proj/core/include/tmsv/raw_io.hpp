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

// Binary raw-sample container. Layout (little-endian, no padding):
//
//   offset  size  field
//        0     4  magic "TMSV"
//        4     2  version (u16, currently 1)
//        6     8  sample_rate (f64, Hz)
//       14     2  n_channels (u16)
//       16     8  n_samples (u64, per channel)
//       24     8  scale (f64)
//       32     -  n_samples * n_channels f64, channel-interleaved
//
// See docs/raw_format.md.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <span>

#include "tmsv/synth.hpp"

namespace tmsv {

inline constexpr std::uint16_t kRawFormatVersion = 1;
inline constexpr std::size_t kRawHeaderBytes = 32;

struct RawHeader {
  std::uint16_t version = kRawFormatVersion;
  double sample_rate = 0.0;
  std::uint16_t n_channels = 0;
  std::uint64_t n_samples = 0;
  double scale = 1.0;
};

/// Appends channel-interleaved frames; the sample count in the header is
/// patched on close(). Throws io-error on any failed write.
class RawWriter {
 public:
  RawWriter(const std::filesystem::path& path, double sample_rate, std::uint16_t n_channels,
            double scale);
  ~RawWriter();
  RawWriter(const RawWriter&) = delete;
  RawWriter& operator=(const RawWriter&) = delete;

  /// `interleaved.size()` must be a multiple of n_channels.
  void write(std::span<const double> interleaved);
  void close();
  std::uint64_t samples_written() const { return n_samples_; }

 private:
  std::filesystem::path path_;
  std::ofstream out_;
  std::uint16_t n_channels_;
  std::uint64_t n_samples_ = 0;
  bool closed_ = false;
};

class RawReader {
 public:
  explicit RawReader(const std::filesystem::path& path);

  const RawHeader& header() const { return header_; }
  std::uint64_t remaining() const { return header_.n_samples - position_; }

  /// Reads up to `max_frames` frames into `interleaved`; returns the frame
  /// count (0 at end of data).
  std::size_t read(std::vector<double>& interleaved, std::size_t max_frames);

 private:
  std::filesystem::path path_;
  std::ifstream in_;
  RawHeader header_;
  std::uint64_t position_ = 0;
};

void write_raw(const std::filesystem::path& path, const RawSampleStream& stream);
RawSampleStream read_raw(const std::filesystem::path& path);

}  // namespace tmsv
